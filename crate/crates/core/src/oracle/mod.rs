//! Online square-loss regression oracles.
//!
//! Every oracle follows the predict-then-update protocol: `predict` is a pure
//! function of the current state and the queried `(context, action)` pair, and
//! `update` folds in one labelled example.

mod aggregating;
mod class;
mod epoch_cover;
mod ogd;
mod vaw;

pub use aggregating::{aggregating_substitution, AggregatingOracle, AGGREGATING_ETA};
pub use class::{BaseClass, FiniteClass, HypothesisClass, LinearClass, TensorClass};
pub use epoch_cover::{empirical_distance, epoch_boundaries, greedy_cover, EpochCoverOracle};
pub use ogd::{OgdOracle, StepSchedule};
pub use vaw::VawForecaster;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A context as seen by the oracles: an enumerated identifier plus optional
/// per-action feature vectors `features[a]`.
///
/// Tabular oracles key on `id`; linear and GLM oracles read `features`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context<T> {
    pub id: usize,
    #[serde(default)]
    pub features: Vec<Vec<T>>,
}

impl<T> Context<T> {
    pub fn tabular(id: usize) -> Self {
        Self {
            id,
            features: Vec::new(),
        }
    }

    pub fn with_features(id: usize, features: Vec<Vec<T>>) -> Self {
        Self { id, features }
    }
}

/// An action: an arm index for finite action sets or a point of the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Action<T> {
    Arm(usize),
    Ball(Vec<T>),
}

/// One labelled example `((context, action), outcome)`.
#[derive(Debug, Clone, Copy)]
pub struct OracleExample<'a, T> {
    pub context: &'a Context<T>,
    pub action: &'a Action<T>,
    pub outcome: T,
}

impl<'a, T: Scalar> OracleExample<'a, T> {
    pub fn new(context: &'a Context<T>, action: &'a Action<T>, outcome: T) -> Self {
        Self {
            context,
            action,
            outcome,
        }
    }

    /// Rejects outcomes outside `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        check_unit_outcome(self.outcome)
    }
}

pub(crate) fn check_unit_outcome<T: Scalar>(y: T) -> Result<()> {
    if !(y >= T::zero() && y <= T::one()) {
        return Err(Error::validation(format!("outcome {y} outside [0, 1]")));
    }
    Ok(())
}

/// Feature vector for `(context, action)`: `x_a` for arms, the action itself for ball actions.
pub(crate) fn feature_vector<'a, T>(context: &'a Context<T>, action: &'a Action<T>) -> Result<&'a [T]> {
    match action {
        Action::Arm(a) => context
            .features
            .get(*a)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::config(format!("context {} has no features for arm {a}", context.id))),
        Action::Ball(v) => Ok(v.as_slice()),
    }
}

pub(crate) fn check_dim<T>(x: &[T], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(Error::config(format!(
            "feature dimension {} does not match oracle dimension {dim}",
            x.len()
        )));
    }
    Ok(())
}

/// Where a square-loss regret budget comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetProvenance {
    /// `2 ln |F|` for the aggregating algorithm.
    FiniteClass2LnF,
    /// `d ln(T/d)` for the Vovk-Azoury-Warmuth forecaster.
    VawDLogT,
    /// `√T` for projected online gradient descent.
    OgdSqrtT,
    /// `√T` for GLMtron with step `1/√T`.
    GlmtronSqrtT,
    /// `d ln T / c_σ²` for the online-Newton GLMtron.
    NewtonGlmDLogT,
    UserSupplied,
}

/// A bound `RegSq(T)` on the oracle's cumulative square-loss regret.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRegretBudget<T> {
    pub bound: T,
    pub provenance: BudgetProvenance,
}

impl<T: Scalar> OracleRegretBudget<T> {
    pub fn finite_class(class_size: usize) -> Self {
        Self {
            bound: T::lit(2.0) * T::from_count(class_size.max(1)).ln(),
            provenance: BudgetProvenance::FiniteClass2LnF,
        }
    }

    pub fn vaw(dim: usize, horizon: usize) -> Self {
        let d = T::from_count(dim);
        let ratio = T::from_count(horizon) / d;
        Self {
            bound: (d * ratio.ln()).max(T::zero()),
            provenance: BudgetProvenance::VawDLogT,
        }
    }

    pub fn ogd(horizon: usize) -> Self {
        Self {
            bound: T::from_count(horizon).sqrt(),
            provenance: BudgetProvenance::OgdSqrtT,
        }
    }

    pub fn glmtron(horizon: usize) -> Self {
        Self {
            bound: T::from_count(horizon).sqrt(),
            provenance: BudgetProvenance::GlmtronSqrtT,
        }
    }

    pub fn newton_glm(dim: usize, horizon: usize, c_sigma: T) -> Self {
        let t = T::from_count(horizon.max(1));
        Self {
            bound: (T::from_count(dim) * t.ln() / (c_sigma * c_sigma)).max(T::zero()),
            provenance: BudgetProvenance::NewtonGlmDLogT,
        }
    }

    pub fn user(bound: T) -> Result<Self> {
        if !(bound >= T::zero()) || !bound.is_finite() {
            return Err(Error::validation(format!("regret budget {bound} must be finite and >= 0")));
        }
        Ok(Self {
            bound,
            provenance: BudgetProvenance::UserSupplied,
        })
    }
}

/// Which oracle assumption an algorithm meets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guarantee {
    /// Regret bound against every adaptively chosen sequence.
    AdversarialRegret,
    /// Prediction-error bound that holds only under realizability.
    RealizableOnly,
}

/// Online regression oracle over finite or ball actions.
pub trait RegressionOracle<T: Scalar>: Send {
    /// Prediction before any clipping. May leave `[0, 1]` for linear oracles.
    fn predict_raw(&self, context: &Context<T>, action: &Action<T>) -> Result<T>;

    /// Prediction clipped into `[0, 1]`.
    fn predict(&self, context: &Context<T>, action: &Action<T>) -> Result<T> {
        Ok(self.predict_raw(context, action)?.clamp01())
    }

    /// Folds one example into the state. Outcomes outside `[0, 1]` are rejected.
    fn update(&mut self, example: &OracleExample<'_, T>) -> Result<()>;

    fn budget(&self, horizon: usize) -> OracleRegretBudget<T>;

    fn guarantee(&self) -> Guarantee;

    fn name(&self) -> &'static str;
}

/// Oracle with linear predictions `ŷ(x, a) = ⟨ŷ(x), a⟩` over ball actions.
pub trait VectorOracle<T: Scalar>: Send {
    fn dim(&self) -> usize;

    /// The prediction vector `ŷ(x) ∈ R^d`.
    fn predict_vector(&self, context: &Context<T>) -> Result<Vec<T>>;

    /// Folds in the loss observed for `action`; losses live in `[-1, 1]`.
    fn update_vector(&mut self, context: &Context<T>, action: &[T], loss: T) -> Result<()>;

    fn budget(&self, horizon: usize) -> OracleRegretBudget<T>;

    fn name(&self) -> &'static str;
}

pub(crate) fn check_signed_loss<T: Scalar>(loss: T) -> Result<()> {
    if !(loss >= -T::one() && loss <= T::one()) {
        return Err(Error::validation(format!("loss {loss} outside [-1, 1]")));
    }
    Ok(())
}

/// Oracle with frozen parameters; used as a "pre-trained on the truth" reference.
#[derive(Debug, Clone)]
pub struct FixedLinearOracle<T> {
    pub theta: Vec<T>,
}

impl<T: Scalar> VectorOracle<T> for FixedLinearOracle<T> {
    fn dim(&self) -> usize {
        self.theta.len()
    }

    fn predict_vector(&self, _context: &Context<T>) -> Result<Vec<T>> {
        Ok(self.theta.clone())
    }

    fn update_vector(&mut self, _context: &Context<T>, _action: &[T], loss: T) -> Result<()> {
        check_signed_loss(loss)
    }

    fn budget(&self, _horizon: usize) -> OracleRegretBudget<T> {
        OracleRegretBudget {
            bound: T::zero(),
            provenance: BudgetProvenance::UserSupplied,
        }
    }

    fn name(&self) -> &'static str {
        "fixed_linear"
    }
}
