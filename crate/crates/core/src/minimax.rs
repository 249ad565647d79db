//! Numerical checks of the per-round minimax problem
//!
//! ```text
//! Val(γ) = max_{ŷ ∈ [0,1]^K} min_p max_{f⋆ ∈ [0,1]^K, a⋆} Σ_a p_a [(f⋆_a - f⋆_{a⋆}) - (γ/4)(ŷ_a - f⋆_a)²]
//! ```
//!
//! Inverse-gap weighting with `μ = K` keeps the objective below `2K/γ` for
//! every `ŷ`, and the instance `ŷ = 0`, `f⋆_{a⋆} = 0`, `f⋆_a = 2/γ` elsewhere
//! forces at least `(1 - 1/K)/γ`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_with_index;
use crate::scalar::Scalar;
use crate::squarecb::{inverse_gap_distribution, ExplorationParams, ScoreVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerRoundInstance<T> {
    pub yhat: Vec<T>,
    pub fstar: Vec<T>,
    pub astar: usize,
    pub gamma: T,
    pub mu: T,
}

impl<T: Scalar> PerRoundInstance<T> {
    pub fn validate(&self) -> Result<()> {
        let k = self.yhat.len();
        if k < 2 || self.fstar.len() != k || self.astar >= k {
            return Err(Error::config("instance needs K >= 2 matching vectors and a⋆ < K"));
        }
        let in_unit = |v: &T| *v >= T::zero() && *v <= T::one();
        if !self.yhat.iter().all(in_unit) || !self.fstar.iter().all(in_unit) {
            return Err(Error::validation("instance entries must lie in [0, 1]"));
        }
        if !(self.gamma > T::zero()) {
            return Err(Error::config("γ must be positive"));
        }
        Ok(())
    }

    /// SquareCB's distribution at this instance's `ŷ`, `γ`, `μ`.
    pub fn squarecb_distribution(&self) -> Result<Vec<T>> {
        let params = ExplorationParams::with_mu(self.yhat.len(), self.gamma, self.mu)?;
        Ok(inverse_gap_distribution(&ScoreVector::new(self.yhat.clone())?, &params)?.probs)
    }
}

/// `Σ_a p_a [(f⋆_a - f⋆_{a⋆}) - (γ/4)(ŷ_a - f⋆_a)²]`.
pub fn per_round_objective<T: Scalar>(inst: &PerRoundInstance<T>, p: &[T]) -> T {
    let quarter = inst.gamma * T::lit(0.25);
    let base = inst.fstar[inst.astar];
    p.iter()
        .zip(&inst.yhat)
        .zip(&inst.fstar)
        .map(|((&pa, &y), &f)| pa * ((f - base) - quarter * (y - f) * (y - f)))
        .sum()
}

/// `argmin_a f⋆_a`, the maximizing `a⋆` for fixed `p`, `ŷ`, `f⋆`.
pub fn worst_astar<T: Scalar>(fstar: &[T]) -> usize {
    let mut best = 0;
    for (a, &f) in fstar.iter().enumerate().skip(1) {
        if f < fstar[best] {
            best = a;
        }
    }
    best
}

/// The lower-bound instance against `p`: `ŷ = 0`, `a⋆ = argmin_a p_a`,
/// `f⋆_{a⋆} = 0` and `f⋆_a = 2/γ` elsewhere. Needs `γ ≥ 2`.
pub fn lower_bound_instance<T: Scalar>(p: &[T], gamma: T) -> Result<PerRoundInstance<T>> {
    if !(gamma >= T::lit(2.0)) {
        return Err(Error::config("the lower-bound instance needs γ >= 2"));
    }
    let k = p.len();
    let mut astar = 0;
    for (a, &q) in p.iter().enumerate() {
        if q < p[astar] {
            astar = a;
        }
    }
    let mut fstar = vec![T::lit(2.0) / gamma; k];
    fstar[astar] = T::zero();
    Ok(PerRoundInstance {
        yhat: vec![T::zero(); k],
        fstar,
        astar,
        gamma,
        mu: T::from_count(k),
    })
}

/// Sampler for randomized certificate checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertificateConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Draw `γ` log-uniformly instead of uniformly.
    #[serde(default = "default_true")]
    pub log_gamma: bool,
    /// `μ = mu_factor · K`.
    #[serde(default = "default_one")]
    pub mu_factor: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_true() -> bool {
    true
}

fn default_one() -> f64 {
    1.0
}

fn default_tolerance() -> f64 {
    1e-9
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self {
            k_min: 2,
            k_max: 10,
            gamma_min: 1.0,
            gamma_max: 1e3,
            log_gamma: true,
            mu_factor: 1.0,
            trials: 1_000_000,
            seed: 0,
            tolerance: default_tolerance(),
        }
    }
}

impl CertificateConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&s)
    }
}

/// Largest number of violations listed in a report; all are counted.
pub const MAX_LISTED_VIOLATIONS: usize = 100;
const BLOCK: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub instance: PerRoundInstance<f64>,
    pub objective: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub bound: String,
    pub holds: bool,
    /// Largest `objective / (2K/γ)`.
    pub max_ratio: f64,
    /// Smallest `2K/γ - objective`.
    pub min_slack: f64,
    pub violation_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub trials: usize,
    pub max_objective: f64,
    pub certificate: CertificateSummary,
    pub violations: Vec<Violation>,
}

struct BlockResult {
    max_objective: f64,
    max_ratio: f64,
    min_slack: f64,
    count: usize,
    violations: Vec<Violation>,
}

fn run_block(cfg: &CertificateConfig, block: usize, trials: usize) -> Result<BlockResult> {
    let mut rng = stream_with_index(cfg.seed, 1_000 + block as u64);
    let mut out = BlockResult {
        max_objective: f64::NEG_INFINITY,
        max_ratio: f64::NEG_INFINITY,
        min_slack: f64::INFINITY,
        count: 0,
        violations: Vec::new(),
    };
    for _ in 0..trials {
        let k = rng.random_range(cfg.k_min..=cfg.k_max);
        let gamma = if cfg.log_gamma {
            (cfg.gamma_min.ln() + rng.random::<f64>() * (cfg.gamma_max.ln() - cfg.gamma_min.ln())).exp()
        } else {
            cfg.gamma_min + rng.random::<f64>() * (cfg.gamma_max - cfg.gamma_min)
        };
        let yhat: Vec<f64> = (0..k).map(|_| rng.random()).collect();
        let fstar: Vec<f64> = (0..k).map(|_| rng.random()).collect();
        let inst = PerRoundInstance {
            astar: worst_astar(&fstar),
            yhat,
            fstar,
            gamma,
            mu: cfg.mu_factor * k as f64,
        };
        let p = inst.squarecb_distribution()?;
        let obj = per_round_objective(&inst, &p);
        let bound = 2.0 * k as f64 / gamma;
        out.max_objective = out.max_objective.max(obj);
        out.max_ratio = out.max_ratio.max(obj / bound);
        out.min_slack = out.min_slack.min(bound - obj);
        if obj > bound + cfg.tolerance {
            out.count += 1;
            if out.violations.len() < MAX_LISTED_VIOLATIONS {
                out.violations.push(Violation {
                    instance: inst,
                    objective: obj,
                    bound,
                });
            }
        }
    }
    Ok(out)
}

/// Checks `objective ≤ 2K/γ + tolerance` on `trials` random instances.
///
/// Trials run in blocks of 10⁴, each with its own stream, so the report
/// does not depend on the thread count.
pub fn verify_certificate(cfg: &CertificateConfig) -> Result<CertificateReport> {
    if cfg.trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    if cfg.k_min < 2 || cfg.k_max < cfg.k_min {
        return Err(Error::config("K range must satisfy 2 <= k_min <= k_max"));
    }
    if !(cfg.gamma_min > 0.0 && cfg.gamma_max >= cfg.gamma_min) {
        return Err(Error::config("γ range must satisfy 0 < gamma_min <= gamma_max"));
    }
    if !(cfg.mu_factor >= 1.0) {
        return Err(Error::config("mu_factor must be >= 1"));
    }
    let blocks = cfg.trials.div_ceil(BLOCK);
    let results = (0..blocks)
        .into_par_iter()
        .map(|b| run_block(cfg, b, BLOCK.min(cfg.trials - b * BLOCK)))
        .collect::<Result<Vec<_>>>()?;
    let mut max_objective = f64::NEG_INFINITY;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut min_slack = f64::INFINITY;
    let mut count = 0;
    let mut violations = Vec::new();
    for r in results {
        max_objective = max_objective.max(r.max_objective);
        max_ratio = max_ratio.max(r.max_ratio);
        min_slack = min_slack.min(r.min_slack);
        count += r.count;
        for v in r.violations {
            if violations.len() < MAX_LISTED_VIOLATIONS {
                violations.push(v);
            }
        }
    }
    Ok(CertificateReport {
        trials: cfg.trials,
        max_objective,
        certificate: CertificateSummary {
            bound: "2K/gamma".into(),
            holds: count == 0,
            max_ratio,
            min_slack,
            violation_count: count,
        },
        violations,
    })
}

/// Default cap on grid evaluations for [`estimate_val`].
pub const VAL_EVALUATION_LIMIT: f64 = 5e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValEstimate {
    pub value: f64,
    /// Maximizing `ŷ` on the grid.
    pub yhat: Vec<f64>,
}

fn grid_points(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::config("grid step must lie in (0, 1]"));
    }
    let m = (1.0 / step).round();
    if ((1.0 / step) - m).abs() > 1e-9 {
        return Err(Error::config(format!("grid step {step} does not divide [0, 1] evenly")));
    }
    let m = m as usize;
    Ok((0..=m).map(|i| i as f64 / m as f64).collect())
}

fn compositions(total: usize, parts: usize, out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>) {
    if cur.len() + 1 == parts {
        cur.push(total);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    for i in 0..=total {
        cur.push(i);
        compositions(total - i, parts, out, cur);
        cur.pop();
    }
}

/// `max_{f⋆ ∈ G^K, a⋆} objective` for fixed `ŷ` and `p`.
///
/// For fixed `a⋆` and `c = f⋆_{a⋆}` the objective separates over arms, and
/// the best `f⋆_a` for `a ≠ a⋆` does not depend on `c`.
fn inner_max(yhat: &[f64], p: &[f64], gamma: f64, grid: &[f64], best_off: &[f64]) -> f64 {
    let k = yhat.len();
    let quarter = gamma / 4.0;
    let mut best = f64::NEG_INFINITY;
    for astar in 0..k {
        let (mut off_mass, mut off_gain) = (0.0, 0.0);
        for a in (0..k).filter(|&a| a != astar) {
            off_mass += p[a];
            off_gain += p[a] * best_off[a];
        }
        for &c in grid {
            let v = off_gain - off_mass * c - p[astar] * quarter * (yhat[astar] - c) * (yhat[astar] - c);
            best = best.max(v);
        }
    }
    best
}

/// Grid estimate of `Val(γ)` for small `K`.
///
/// `ŷ` and `f⋆` range over `G^K` with `G = {0, h, …, 1}`. The inner minimum
/// over `p` takes SquareCB's distribution (`μ = K`) and every simplex point
/// with coordinates in multiples of `h`.
pub fn estimate_val(gamma: f64, arms: usize, grid_step: f64) -> Result<ValEstimate> {
    estimate_val_with_limit(gamma, arms, grid_step, VAL_EVALUATION_LIMIT)
}

pub fn estimate_val_with_limit(gamma: f64, arms: usize, grid_step: f64, limit: f64) -> Result<ValEstimate> {
    if arms < 2 {
        return Err(Error::config("need K >= 2"));
    }
    if !(gamma > 0.0) {
        return Err(Error::config("γ must be positive"));
    }
    let grid = grid_points(grid_step)?;
    let n = grid.len();
    let m = n - 1;
    // C(m + K - 1, K - 1) simplex points, counted before enumerating them.
    let simplex_count = (1..arms).fold(1.0, |acc, i| acc * (m + i) as f64 / i as f64);
    let cost = (n as f64).powi(arms as i32) * (simplex_count + 1.0) * (arms * arms * n) as f64;
    if cost > limit {
        return Err(Error::Resource(format!(
            "estimate needs about {cost:.3e} evaluations, above the limit {limit:.1e}"
        )));
    }
    let mut simplex = Vec::new();
    compositions(m, arms, &mut simplex, &mut Vec::with_capacity(arms));
    let simplex: Vec<Vec<f64>> = simplex
        .into_iter()
        .map(|c| c.into_iter().map(|i| i as f64 / m as f64).collect())
        .collect();
    let quarter = gamma / 4.0;
    let total = n.pow(arms as u32);
    let params = ExplorationParams::new(arms, gamma)?;
    let best = (0..total)
        .into_par_iter()
        .map(|idx| -> Result<(f64, usize)> {
            let yhat: Vec<f64> = (0..arms).map(|a| grid[(idx / n.pow(a as u32)) % n]).collect();
            let best_off: Vec<f64> = yhat
                .iter()
                .map(|&y| {
                    grid.iter()
                        .map(|&f| f - quarter * (y - f) * (y - f))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            let igw = inverse_gap_distribution(&ScoreVector::new(yhat.clone())?, &params)?.probs;
            let mut v = inner_max(&yhat, &igw, gamma, &grid, &best_off);
            for p in &simplex {
                v = v.min(inner_max(&yhat, p, gamma, &grid, &best_off));
            }
            Ok((v, idx))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((f64::NEG_INFINITY, 0), |acc, x| if x.0 > acc.0 { x } else { acc });
    Ok(ValEstimate {
        value: best.0,
        yhat: (0..arms).map(|a| grid[(best.1 / n.pow(a as u32)) % n]).collect(),
    })
}
