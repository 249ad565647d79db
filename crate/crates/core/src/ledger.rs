//! Per-round regret accounting and its CSV form.
//!
//! Columns: `round, arm, loss, realized_regret_cum, pseudo_regret_cum, p_chosen`.
//! Finite actions write the arm index; ball actions write the action vector
//! as space-separated components. Floats use the shortest round-trip form,
//! so identical runs give identical bytes.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const LEDGER_HEADER: [&str; 6] = [
    "round",
    "arm",
    "loss",
    "realized_regret_cum",
    "pseudo_regret_cum",
    "p_chosen",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ChosenAction {
    Arm(usize),
    Vector(Vec<f64>),
}

impl ChosenAction {
    fn render(&self) -> String {
        match self {
            ChosenAction::Arm(a) => a.to_string(),
            ChosenAction::Vector(v) => {
                let mut s = String::new();
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        s.push(' ');
                    }
                    write!(s, "{x}").unwrap();
                }
                s
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRow {
    pub round: usize,
    pub arm: ChosenAction,
    pub loss: f64,
    pub realized_regret_cum: f64,
    pub pseudo_regret_cum: f64,
    pub p_chosen: f64,
}

/// Cumulative realized and pseudo-regret with a per-round trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretLedger {
    rows: Vec<LedgerRow>,
    realized: f64,
    pseudo: f64,
    /// Oracle predictions clipped into `[0, 1]` before forming a distribution.
    pub clipped_predictions: usize,
    /// Ball predictions rescaled back into the unit ball.
    pub rescaled_predictions: usize,
}

impl RegretLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(rounds: usize) -> Self {
        Self {
            rows: Vec::with_capacity(rounds),
            ..Self::default()
        }
    }

    /// Records one round.
    ///
    /// `realized_increment` is `ℓ_t(a_t) - ℓ_t(π⋆(x_t))`, `pseudo_increment`
    /// is `f⋆(x_t, a_t) - min_a f⋆(x_t, a)`.
    pub fn record(&mut self, arm: ChosenAction, loss: f64, realized_increment: f64, pseudo_increment: f64, p_chosen: f64) {
        self.realized += realized_increment;
        self.pseudo += pseudo_increment;
        self.rows.push(LedgerRow {
            round: self.rows.len() + 1,
            arm,
            loss,
            realized_regret_cum: self.realized,
            pseudo_regret_cum: self.pseudo,
            p_chosen,
        });
    }

    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn realized_regret(&self) -> f64 {
        self.realized
    }

    pub fn pseudo_regret(&self) -> f64 {
        self.pseudo
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::io("ledger", std::io::Error::other(e.to_string()));
        w.write_record(LEDGER_HEADER).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.round.to_string(),
                r.arm.render(),
                r.loss.to_string(),
                r.realized_regret_cum.to_string(),
                r.pseudo_regret_cum.to_string(),
                r.p_chosen.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("ledger", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
