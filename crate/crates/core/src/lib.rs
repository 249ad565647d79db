//! Contextual bandits through online square-loss regression.
//!
//! SquareCB turns an online regression oracle into a contextual bandit
//! learner by weighting each arm inversely to its predicted gap from the
//! greedy arm. This crate ships the reduction for finite actions and for the
//! unit ball, a family of oracles (aggregating algorithm, Vovk-Azoury-Warmuth,
//! projected gradient descent, GLMtron and its Newton variant, an epoch-cover
//! oracle), ground-truth environments, numerical checks of the per-round
//! minimax inequality and a seeded experiment harness.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! environments and the harness run in `f64`.
//!
//! ```
//! use squarecb::env::make_finite_class_env;
//! use squarecb::oracle::{AggregatingOracle, OracleRegretBudget};
//! use squarecb::squarecb::{run_squarecb, tune_gamma_realizable, ExplorationParams};
//!
//! let (env, class, _) = make_finite_class_env(5, 20, 10, 0)?;
//! let gamma = tune_gamma_realizable(5, 2_000, &OracleRegretBudget::finite_class(20), 0.05)?;
//! let mut oracle = AggregatingOracle::new(class)?;
//! let ledger = run_squarecb(&env, &mut oracle, &ExplorationParams::new(5, gamma)?, 2_000, 42)?;
//! assert_eq!(ledger.len(), 2_000);
//! # Ok::<(), squarecb::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod env;
pub mod error;
pub mod glm;
pub mod harness;
pub mod hilbert;
pub mod ledger;
pub mod linalg;
pub mod minimax;
pub mod oracle;
pub mod rng;
pub mod scalar;
pub mod squarecb;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ScoreVector64 = squarecb::ScoreVector<f64>;
pub type ScoreVector32 = squarecb::ScoreVector<f32>;
pub type ActionDistribution64 = squarecb::ActionDistribution<f64>;
pub type ActionDistribution32 = squarecb::ActionDistribution<f32>;
pub type ExplorationParams64 = squarecb::ExplorationParams<f64>;
pub type ExplorationParams32 = squarecb::ExplorationParams<f32>;
pub type Vaw64 = oracle::VawForecaster<f64>;
pub type Vaw32 = oracle::VawForecaster<f32>;
pub type Ogd64 = oracle::OgdOracle<f64>;
pub type Ogd32 = oracle::OgdOracle<f32>;
pub type Glmtron64 = glm::GlmtronOracle<f64>;
pub type Glmtron32 = glm::GlmtronOracle<f32>;
pub type NewtonGlm64 = glm::NewtonGlmOracle<f64>;
pub type NewtonGlm32 = glm::NewtonGlmOracle<f32>;
pub type FiniteClass64 = oracle::FiniteClass<f64>;
pub type Aggregating64 = oracle::AggregatingOracle<f64, oracle::FiniteClass<f64>>;
pub type Aggregating32 = oracle::AggregatingOracle<f32, oracle::FiniteClass<f32>>;
pub type EpochCover64 = oracle::EpochCoverOracle<f64>;
pub type MomentPair64 = hilbert::MomentPair<f64>;
pub type MomentPair32 = hilbert::MomentPair<f32>;
pub type PerRoundInstance64 = minimax::PerRoundInstance<f64>;
