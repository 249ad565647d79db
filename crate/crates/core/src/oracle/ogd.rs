//! Projected online gradient descent on `ℓ(θ) = (⟨θ, x⟩ - y)²` over the unit ball.

use super::{check_dim, check_signed_loss, check_unit_outcome, feature_vector};
use super::{Action, Context, Guarantee, OracleExample, OracleRegretBudget, RegressionOracle, VectorOracle};
use crate::error::{Error, Result};
use crate::linalg::{dot, project_unit_ball};
use crate::scalar::Scalar;

/// Step-size rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule<T> {
    /// Constant `η`; `1/√T` when the horizon is known.
    Fixed(T),
    /// `η_t = 1/√t` when no horizon is given.
    Anytime,
}

#[derive(Debug, Clone)]
pub struct OgdOracle<T> {
    theta: Vec<T>,
    step: StepSchedule<T>,
    rounds: usize,
}

impl<T: Scalar> OgdOracle<T> {
    /// `η = 1/√T` with a known horizon, otherwise the anytime schedule.
    pub fn new(dim: usize, horizon: Option<usize>) -> Result<Self> {
        let step = match horizon {
            Some(0) => return Err(Error::config("OGD horizon must be positive")),
            Some(t) => StepSchedule::Fixed(T::one() / T::from_count(t).sqrt()),
            None => StepSchedule::Anytime,
        };
        Self::with_schedule(dim, step)
    }

    pub fn with_schedule(dim: usize, step: StepSchedule<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("OGD dimension must be at least 1"));
        }
        if let StepSchedule::Fixed(eta) = step {
            if !(eta > T::zero()) {
                return Err(Error::config("OGD step must be positive"));
            }
        }
        Ok(Self {
            theta: vec![T::zero(); dim],
            step,
            rounds: 0,
        })
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn current_step(&self) -> T {
        match self.step {
            StepSchedule::Fixed(eta) => eta,
            StepSchedule::Anytime => T::one() / T::from_count(self.rounds + 1).sqrt(),
        }
    }

    fn step_on(&mut self, x: &[T], y: T) -> Result<()> {
        check_dim(x, self.theta.len())?;
        let eta = self.current_step();
        let residual = dot(&self.theta, x) - y;
        let scale = eta * T::lit(2.0) * residual;
        for (t, &xi) in self.theta.iter_mut().zip(x) {
            *t = *t - scale * xi;
        }
        project_unit_ball(&mut self.theta);
        self.rounds += 1;
        Ok(())
    }
}

impl<T: Scalar> RegressionOracle<T> for OgdOracle<T> {
    fn predict_raw(&self, context: &Context<T>, action: &Action<T>) -> Result<T> {
        let x = feature_vector(context, action)?;
        check_dim(x, self.theta.len())?;
        Ok(dot(&self.theta, x))
    }

    fn update(&mut self, example: &OracleExample<'_, T>) -> Result<()> {
        check_unit_outcome(example.outcome)?;
        self.step_on(feature_vector(example.context, example.action)?, example.outcome)
    }

    fn budget(&self, horizon: usize) -> OracleRegretBudget<T> {
        OracleRegretBudget::ogd(horizon)
    }

    fn guarantee(&self) -> Guarantee {
        Guarantee::AdversarialRegret
    }

    fn name(&self) -> &'static str {
        "ogd"
    }
}

impl<T: Scalar> VectorOracle<T> for OgdOracle<T> {
    fn dim(&self) -> usize {
        self.theta.len()
    }

    fn predict_vector(&self, _context: &Context<T>) -> Result<Vec<T>> {
        Ok(self.theta.clone())
    }

    fn update_vector(&mut self, _context: &Context<T>, action: &[T], loss: T) -> Result<()> {
        check_signed_loss(loss)?;
        self.step_on(action, loss)
    }

    fn budget(&self, horizon: usize) -> OracleRegretBudget<T> {
        OracleRegretBudget::ogd(horizon)
    }

    fn name(&self) -> &'static str {
        "ogd"
    }
}
