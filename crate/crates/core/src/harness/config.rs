//! Versioned experiment configuration (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::NoiseModel;
use crate::error::{Error, Result};
use crate::glm::Link;
use crate::squarecb::Adversary;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Squarecb,
    SquarecbHilbert,
    EpsilonGreedyBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tuning {
    Theorem1,
    /// Stochastic contexts; `epsilon` defaults to the environment's level.
    Theorem6 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    /// Adaptive contexts.
    Theorem7 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    Theorem8,
    /// Fixed `γ` (finite actions) or `β` (ball).
    Manual { value: f64 },
}

impl Tuning {
    pub fn adversary(&self) -> Option<Adversary> {
        match self {
            Tuning::Theorem6 { .. } => Some(Adversary::Stochastic),
            Tuning::Theorem7 { .. } => Some(Adversary::Adaptive),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisspecSpec {
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub time_varying: bool,
}

fn default_contexts() -> usize {
    10
}

fn default_pool() -> usize {
    1000
}

fn default_radius() -> f64 {
    0.8
}

fn default_gap() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvironmentSpec {
    FiniteClass {
        arms: usize,
        class_size: usize,
        #[serde(default = "default_contexts")]
        contexts: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        misspecification: Option<MisspecSpec>,
    },
    Linear {
        arms: usize,
        dim: usize,
        #[serde(default = "default_pool")]
        pool: usize,
        noise: NoiseModel,
        #[serde(default)]
        seed: u64,
    },
    Glm {
        arms: usize,
        dim: usize,
        #[serde(default = "default_pool")]
        pool: usize,
        link: Link,
        noise: NoiseModel,
        #[serde(default)]
        seed: u64,
    },
    GapFamily {
        #[serde(default = "default_gap")]
        delta: f64,
        instance: usize,
    },
    Ball {
        dim: usize,
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default)]
        noise_sigma: f64,
        #[serde(default)]
        seed: u64,
    },
    /// A serialized finite-action instance.
    File { path: PathBuf },
}

fn default_ridge() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    /// Aggregating algorithm over the environment's finite class.
    Aggregating,
    Vaw {
        #[serde(default = "default_ridge")]
        ridge: f64,
    },
    Ogd,
    Glmtron,
    NewtonGlm {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c_sigma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    /// Epoch cover over the per-arm columns of the environment's finite class.
    EpochCover { epsilon: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

fn default_delta() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub algorithm: Algorithm,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Exploration parameter; defaults to `K`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Overrides the oracle family's `RegSq(T)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_override: Option<f64>,
    pub tuning: Tuning,
    pub environment: EnvironmentSpec,
    pub oracle: OracleSpec,
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&s)?;
        if let EnvironmentSpec::File { path: p } = &mut cfg.environment {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("seeds must be distinct"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config("delta must lie in (0, 1)"));
        }
        let ball_env = matches!(self.environment, EnvironmentSpec::Ball { .. });
        match self.algorithm {
            Algorithm::SquarecbHilbert => {
                if !ball_env {
                    return Err(Error::config("squarecb_hilbert needs a ball environment"));
                }
                if !matches!(self.tuning, Tuning::Theorem8 | Tuning::Manual { .. }) {
                    return Err(Error::config("squarecb_hilbert takes theorem8 or manual tuning"));
                }
                if !matches!(self.oracle, OracleSpec::Vaw { .. } | OracleSpec::Ogd) {
                    return Err(Error::config("squarecb_hilbert needs a vaw or ogd oracle"));
                }
            }
            _ => {
                if ball_env {
                    return Err(Error::config("ball environments need the squarecb_hilbert algorithm"));
                }
                if matches!(self.tuning, Tuning::Theorem8) {
                    return Err(Error::config("theorem8 tuning applies to squarecb_hilbert only"));
                }
            }
        }
        if let Tuning::Manual { value } = self.tuning {
            if !(value > 0.0) {
                return Err(Error::config("manual tuning value must be positive"));
            }
        }
        if let Some(b) = self.budget_override {
            if !(b >= 0.0) || !b.is_finite() {
                return Err(Error::config("budget_override must be finite and >= 0"));
            }
        }
        Ok(())
    }
}
