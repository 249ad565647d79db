//! Side-by-side comparison of run summaries.

use serde::Serialize;

use super::run::RunSummary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub label: String,
    pub mean_regret: f64,
    pub bound: Option<f64>,
    pub satisfaction: Option<f64>,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub horizon: usize,
    pub environment: String,
    /// Sorted by mean regret, lowest first.
    pub rows: Vec<ReportRow>,
}

fn label(s: &RunSummary) -> String {
    let algo = serde_json::to_value(s.algorithm)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    match &s.name {
        Some(n) => format!("{n} ({algo}/{})", s.oracle),
        None => format!("{algo}/{}", s.oracle),
    }
}

/// Errors on empty input and on summaries with different horizons or environments.
pub fn compare_report(summaries: &[RunSummary]) -> Result<ComparisonTable> {
    let first = summaries
        .first()
        .ok_or_else(|| Error::Usage("report needs at least one summary".into()))?;
    for s in summaries {
        if s.horizon != first.horizon {
            return Err(Error::validation(format!(
                "horizon mismatch: {} vs {}",
                s.horizon, first.horizon
            )));
        }
        if s.environment != first.environment {
            return Err(Error::validation(format!(
                "environment mismatch: {} vs {}",
                s.environment, first.environment
            )));
        }
    }
    let mut rows: Vec<ReportRow> = summaries
        .iter()
        .map(|s| ReportRow {
            label: label(s),
            mean_regret: s.mean_regret(),
            bound: s.bound,
            satisfaction: s.bound_satisfaction,
            seeds: s.seeds.len(),
        })
        .collect();
    rows.sort_by(|a, b| a.mean_regret.total_cmp(&b.mean_regret));
    Ok(ComparisonTable {
        horizon: first.horizon,
        environment: first.environment.clone(),
        rows,
    })
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.prec$}"))
}

impl ComparisonTable {
    pub fn to_text(&self) -> String {
        let header = ["run", "mean_regret", "bound", "within_bound", "seeds"];
        let cells: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.label.clone(),
                    format!("{:.3}", r.mean_regret),
                    opt(r.bound, 3),
                    opt(r.satisfaction, 3),
                    r.seeds.to_string(),
                ]
            })
            .collect();
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = format!("T = {}, environment = {}\n", self.horizon, self.environment);
        let line = |cols: Vec<&str>| -> String {
            let parts: Vec<String> = cols
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            parts.join("  ").trim_end().to_string() + "\n"
        };
        out += &line(header.to_vec());
        for row in &cells {
            out += &line(row.iter().map(String::as_str).collect());
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(["run", "mean_regret", "bound", "within_bound", "seeds"]).map_err(err)?;
        for r in &self.rows {
            w.write_record([
                r.label.clone(),
                r.mean_regret.to_string(),
                r.bound.map_or_else(String::new, |b| b.to_string()),
                r.satisfaction.map_or_else(String::new, |s| s.to_string()),
                r.seeds.to_string(),
            ])
            .map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
    }
}
