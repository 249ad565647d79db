//! Experiment execution: build the environment and oracle, run every seed,
//! persist ledgers and a summary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, EnvironmentSpec, ExperimentConfig, OracleSpec, Tuning};
use crate::env::{
    make_finite_class_env, make_gap_family, make_glm_env, make_linear_env, make_misspecified_env, BallEnvironment,
    EnvironmentInstance, TruthSpec,
};
use crate::error::{Error, Result};
use crate::glm::{GlmtronOracle, NewtonGlmOracle};
use crate::hilbert::{hilbert_bound, run_squarecb_hilbert, tune_beta, HilbertParams};
use crate::ledger::RegretLedger;
use crate::oracle::{
    AggregatingOracle, EpochCoverOracle, FiniteClass, Guarantee, OgdOracle, OracleRegretBudget, RegressionOracle,
    VawForecaster, VectorOracle,
};
use crate::squarecb::{
    misspecified_bound, realizable_bound, run_epsilon_greedy, run_squarecb, tune_gamma_misspecified,
    tune_gamma_realizable, ExplorationParams,
};

/// A resolved environment.
#[derive(Debug, Clone)]
pub enum BuiltEnvironment {
    Finite {
        env: EnvironmentInstance,
        class: Option<FiniteClass<f64>>,
    },
    Ball(BallEnvironment),
}

/// Effective horizon: the gap family pads `T` to a multiple of `N`.
pub fn effective_horizon(cfg: &ExperimentConfig) -> Result<usize> {
    match &cfg.environment {
        EnvironmentSpec::GapFamily { delta, .. } => Ok(make_gap_family(cfg.horizon, *delta)?.horizon),
        _ => Ok(cfg.horizon),
    }
}

pub fn build_environment(cfg: &ExperimentConfig) -> Result<BuiltEnvironment> {
    Ok(match &cfg.environment {
        EnvironmentSpec::FiniteClass {
            arms,
            class_size,
            contexts,
            seed,
            misspecification,
        } => {
            let (base, class, _) = make_finite_class_env(*arms, *class_size, *contexts, *seed)?;
            let env = match misspecification {
                Some(m) => make_misspecified_env(&base, m.epsilon, m.seed, m.time_varying)?,
                None => base,
            };
            BuiltEnvironment::Finite {
                env,
                class: Some(class),
            }
        }
        EnvironmentSpec::Linear {
            arms,
            dim,
            pool,
            noise,
            seed,
        } => BuiltEnvironment::Finite {
            env: make_linear_env(*arms, *dim, *pool, noise.clone(), *seed)?,
            class: None,
        },
        EnvironmentSpec::Glm {
            arms,
            dim,
            pool,
            link,
            noise,
            seed,
        } => BuiltEnvironment::Finite {
            env: make_glm_env(*arms, *dim, *pool, link.clone(), noise.clone(), *seed)?,
            class: None,
        },
        EnvironmentSpec::GapFamily { delta, instance } => {
            let family = make_gap_family(cfg.horizon, *delta)?;
            BuiltEnvironment::Finite {
                env: family.instance(*instance)?,
                class: Some(family.class()),
            }
        }
        EnvironmentSpec::Ball {
            dim,
            radius,
            noise_sigma,
            seed,
        } => BuiltEnvironment::Ball(BallEnvironment::random(*dim, *radius, *noise_sigma, *seed)?),
        EnvironmentSpec::File { path } => {
            let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            BuiltEnvironment::Finite {
                env: EnvironmentInstance::from_json(&s)?,
                class: None,
            }
        }
    })
}

fn feature_dim(env: &EnvironmentInstance) -> Result<usize> {
    env.contexts
        .first()
        .and_then(|c| c.features.first())
        .map(|f| f.len())
        .ok_or_else(|| Error::config("this oracle needs an environment with feature vectors"))
}

fn glm_link(env: &EnvironmentInstance) -> Result<(crate::glm::Link, f64)> {
    match &env.truth {
        TruthSpec::Glm { link, c_sigma, .. } => Ok((link.clone(), *c_sigma)),
        TruthSpec::Linear { .. } => Ok((crate::glm::Link::ClippedIdentity, 0.0)),
        TruthSpec::Table => Err(Error::config("GLM oracles need a linear or GLM environment")),
    }
}

/// Fresh finite-action oracle for one run.
pub fn build_oracle(
    spec: &OracleSpec,
    env: &EnvironmentInstance,
    class: Option<&FiniteClass<f64>>,
    horizon: usize,
) -> Result<Box<dyn RegressionOracle<f64>>> {
    let need_class = || class.cloned().ok_or_else(|| Error::config("this oracle needs a finite-class environment"));
    Ok(match spec {
        OracleSpec::Aggregating => Box::new(AggregatingOracle::new(need_class()?)?),
        OracleSpec::EpochCover { epsilon } => {
            Box::new(EpochCoverOracle::new(need_class()?.base_columns(), env.arms, *epsilon)?)
        }
        OracleSpec::Vaw { ridge } => Box::new(VawForecaster::new(feature_dim(env)?, *ridge)?),
        OracleSpec::Ogd => Box::new(OgdOracle::new(feature_dim(env)?, Some(horizon))?),
        OracleSpec::Glmtron => {
            let (link, _) = glm_link(env)?;
            Box::new(GlmtronOracle::new(feature_dim(env)?, link, horizon)?)
        }
        OracleSpec::NewtonGlm { c_sigma, eta, epsilon } => {
            let (link, floor) = glm_link(env)?;
            let c = c_sigma.unwrap_or(floor);
            if !(c > 0.0) {
                return Err(Error::config("newton_glm needs c_sigma > 0 (the link's derivative floor is zero)"));
            }
            Box::new(NewtonGlmOracle::with_params(
                feature_dim(env)?,
                link,
                c,
                eta.unwrap_or(1.0 / (2.0 * c)),
                epsilon.unwrap_or(1.0),
            )?)
        }
    })
}

fn build_vector_oracle(spec: &OracleSpec, dim: usize, horizon: usize) -> Result<Box<dyn VectorOracle<f64>>> {
    Ok(match spec {
        OracleSpec::Vaw { ridge } => Box::new(VawForecaster::new(dim, *ridge)?),
        OracleSpec::Ogd => Box::new(OgdOracle::new(dim, Some(horizon))?),
        _ => return Err(Error::config("ball environments take vaw or ogd oracles")),
    })
}

/// Which cumulative regret the bound is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMetric {
    Realized,
    Pseudo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub realized_regret: f64,
    pub pseudo_regret: f64,
    pub clipped_predictions: usize,
    pub rescaled_predictions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub within_bound: Option<bool>,
    pub ledger: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub algorithm: Algorithm,
    pub oracle: String,
    pub environment: String,
    pub horizon: usize,
    pub arms_or_dim: usize,
    pub delta: f64,
    pub tuning: Tuning,
    /// `γ` for finite actions, `β` for the ball; absent for the baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    pub budget: OracleRegretBudget<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    pub bound_metric: BoundMetric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_satisfaction: Option<f64>,
    pub outside_theorem_scope: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub seeds: Vec<SeedResult>,
    pub mean_realized_regret: f64,
    pub mean_pseudo_regret: f64,
    pub realized_quantiles: Quantiles,
    pub wall_time_secs: f64,
}

impl RunSummary {
    pub fn mean_regret(&self) -> f64 {
        match self.bound_metric {
            BoundMetric::Realized => self.mean_realized_regret,
            BoundMetric::Pseudo => self.mean_pseudo_regret,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&s).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Resolved plan shared by every seed.
struct Plan {
    horizon: usize,
    rate: Option<f64>,
    budget: OracleRegretBudget<f64>,
    bound: Option<f64>,
    metric: BoundMetric,
    oracle_name: String,
    size: usize,
    guarantee: Guarantee,
}

fn plan(cfg: &ExperimentConfig, built: &BuiltEnvironment) -> Result<Plan> {
    let horizon = effective_horizon(cfg)?;
    let override_budget = cfg.budget_override.map(OracleRegretBudget::user).transpose()?;
    match built {
        BuiltEnvironment::Ball(env) => {
            let probe = build_vector_oracle(&cfg.oracle, env.dim(), horizon)?;
            let budget = override_budget.unwrap_or_else(|| probe.budget(horizon));
            let (rate, bound) = match cfg.tuning {
                Tuning::Manual { value } => (value, None),
                _ => (
                    tune_beta(env.dim(), horizon, &budget, cfg.delta)?,
                    Some(hilbert_bound(env.dim(), horizon, budget.bound, cfg.delta)),
                ),
            };
            Ok(Plan {
                horizon,
                rate: Some(rate),
                budget,
                bound,
                metric: BoundMetric::Realized,
                oracle_name: probe.name().into(),
                size: env.dim(),
                guarantee: Guarantee::AdversarialRegret,
            })
        }
        BuiltEnvironment::Finite { env, class } => {
            let probe = build_oracle(&cfg.oracle, env, class.as_ref(), horizon)?;
            let budget = override_budget.unwrap_or_else(|| probe.budget(horizon));
            let k = env.arms;
            let level = env.misspecification.as_ref().map_or(0.0, |m| m.level);
            let (rate, bound, metric) = match (&cfg.algorithm, &cfg.tuning) {
                (Algorithm::EpsilonGreedyBaseline, _) => (None, None, BoundMetric::Realized),
                (_, Tuning::Manual { value }) => (Some(*value), None, BoundMetric::Realized),
                (_, Tuning::Theorem1) => (
                    Some(tune_gamma_realizable(k, horizon, &budget, cfg.delta)?),
                    Some(realizable_bound(k, horizon, budget.bound, cfg.delta)),
                    BoundMetric::Realized,
                ),
                (_, t @ (Tuning::Theorem6 { epsilon } | Tuning::Theorem7 { epsilon })) => {
                    let eps = epsilon.unwrap_or(level);
                    let adv = t.adversary().expect("misspecified tuning");
                    (
                        Some(tune_gamma_misspecified(k, horizon, &budget, eps, adv)?),
                        Some(misspecified_bound(k, horizon, budget.bound, eps, adv)),
                        BoundMetric::Pseudo,
                    )
                }
                (_, Tuning::Theorem8) => return Err(Error::config("theorem8 tuning needs a ball environment")),
            };
            Ok(Plan {
                horizon,
                rate,
                budget,
                bound,
                metric,
                oracle_name: probe.name().into(),
                size: k,
                guarantee: probe.guarantee(),
            })
        }
    }
}

/// Runs one seed without touching the filesystem.
pub fn run_seed(cfg: &ExperimentConfig, built: &BuiltEnvironment, seed: u64) -> Result<RegretLedger> {
    let p = plan(cfg, built)?;
    run_seed_with(cfg, built, &p, seed)
}

fn run_seed_with(cfg: &ExperimentConfig, built: &BuiltEnvironment, p: &Plan, seed: u64) -> Result<RegretLedger> {
    match built {
        BuiltEnvironment::Ball(env) => {
            let mut oracle = build_vector_oracle(&cfg.oracle, env.dim(), p.horizon)?;
            let params = HilbertParams::new(env.dim(), p.rate.expect("ball runs have β"))?;
            run_squarecb_hilbert(env, oracle.as_mut(), &params, p.horizon, seed)
        }
        BuiltEnvironment::Finite { env, class } => {
            let mut oracle = build_oracle(&cfg.oracle, env, class.as_ref(), p.horizon)?;
            match cfg.algorithm {
                Algorithm::EpsilonGreedyBaseline => run_epsilon_greedy(env, oracle.as_mut(), p.horizon, seed),
                _ => {
                    let gamma = p.rate.expect("squarecb runs have γ");
                    let params = match cfg.mu {
                        Some(mu) => ExplorationParams::with_mu(env.arms, gamma, mu)?,
                        None => ExplorationParams::new(env.arms, gamma)?,
                    };
                    run_squarecb(env, oracle.as_mut(), &params, p.horizon, seed)
                }
            }
        }
    }
}

pub fn ledger_file_name(seed: u64) -> String {
    format!("ledger_seed_{seed}.csv")
}

fn environment_label(spec: &EnvironmentSpec) -> String {
    match spec {
        EnvironmentSpec::FiniteClass { .. } => "finite_class",
        EnvironmentSpec::Linear { .. } => "linear",
        EnvironmentSpec::Glm { .. } => "glm",
        EnvironmentSpec::GapFamily { .. } => "gap_family",
        EnvironmentSpec::Ball { .. } => "ball",
        EnvironmentSpec::File { .. } => "file",
    }
    .into()
}

/// Runs every seed in parallel and writes `ledger_seed_<s>.csv`,
/// `environment.json` and `summary.json` under `out_dir`.
pub fn run_experiment_in(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let start = Instant::now();
    let built = build_environment(cfg)?;
    let p = plan(cfg, &built)?;
    let mut notes = Vec::new();
    let misspecified = matches!(&built, BuiltEnvironment::Finite { env, .. } if env.is_misspecified());
    let mut outside = false;
    if misspecified && p.guarantee == Guarantee::RealizableOnly {
        outside = true;
        notes.push("misspecified environment with a realizable-only oracle".into());
    }
    if misspecified && matches!(cfg.tuning, Tuning::Theorem1) {
        outside = true;
        notes.push("theorem1 tuning assumes realizability but the environment is misspecified".into());
    }
    let ledgers = cfg
        .seeds
        .par_iter()
        .map(|&s| run_seed_with(cfg, &built, &p, s))
        .collect::<Result<Vec<_>>>()?;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let env_json = match &built {
        BuiltEnvironment::Finite { env, .. } => env.to_json()?,
        BuiltEnvironment::Ball(b) => serde_json::to_string_pretty(b).map_err(|e| Error::Parse(e.to_string()))?,
    };
    let env_path = out_dir.join("environment.json");
    std::fs::write(&env_path, env_json).map_err(|e| Error::io(&env_path, e))?;

    let mut seeds = Vec::with_capacity(ledgers.len());
    for (&seed, ledger) in cfg.seeds.iter().zip(&ledgers) {
        let path = out_dir.join(ledger_file_name(seed));
        ledger.save_csv(&path)?;
        let metric_value = match p.metric {
            BoundMetric::Realized => ledger.realized_regret(),
            BoundMetric::Pseudo => ledger.pseudo_regret(),
        };
        seeds.push(SeedResult {
            seed,
            realized_regret: ledger.realized_regret(),
            pseudo_regret: ledger.pseudo_regret(),
            clipped_predictions: ledger.clipped_predictions,
            rescaled_predictions: ledger.rescaled_predictions,
            within_bound: p.bound.map(|b| metric_value <= b),
            ledger: PathBuf::from(ledger_file_name(seed)),
        });
    }
    let n = seeds.len() as f64;
    let mut realized: Vec<f64> = seeds.iter().map(|s| s.realized_regret).collect();
    realized.sort_by(f64::total_cmp);
    let satisfaction = p
        .bound
        .map(|_| seeds.iter().filter(|s| s.within_bound == Some(true)).count() as f64 / n);
    let summary = RunSummary {
        schema_version: super::config::SCHEMA_VERSION,
        name: cfg.name.clone(),
        algorithm: cfg.algorithm,
        oracle: p.oracle_name.clone(),
        environment: environment_label(&cfg.environment),
        horizon: p.horizon,
        arms_or_dim: p.size,
        delta: cfg.delta,
        tuning: cfg.tuning.clone(),
        learning_rate: p.rate,
        budget: p.budget,
        bound: p.bound,
        bound_metric: p.metric,
        bound_satisfaction: satisfaction,
        outside_theorem_scope: outside,
        notes,
        mean_realized_regret: seeds.iter().map(|s| s.realized_regret).sum::<f64>() / n,
        mean_pseudo_regret: seeds.iter().map(|s| s.pseudo_regret).sum::<f64>() / n,
        realized_quantiles: Quantiles {
            q05: quantile(&realized, 0.05),
            q50: quantile(&realized, 0.5),
            q95: quantile(&realized, 0.95),
        },
        seeds,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    let sum_path = out_dir.join("summary.json");
    std::fs::write(&sum_path, summary.to_json()?).map_err(|e| Error::io(&sum_path, e))?;
    Ok(summary)
}

/// [`run_experiment_in`] with the configured output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    run_experiment_in(cfg, &cfg.output.dir)
}
