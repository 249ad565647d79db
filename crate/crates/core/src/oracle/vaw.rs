//! Vovk-Azoury-Warmuth forecaster.
//!
//! Predicts `ŷ_t(x) = xᵀ (λI + Σ_{s<t} x_s x_sᵀ + x xᵀ)⁻¹ Σ_{s<t} y_s x_s`. The
//! inverse Gram matrix without the query point is kept up to date with
//! Sherman–Morrison, so the query term is folded in as a scalar correction.

use super::{check_dim, check_signed_loss, check_unit_outcome, feature_vector};
use super::{Action, Context, Guarantee, OracleExample, OracleRegretBudget, RegressionOracle, VectorOracle};
use crate::error::{Error, Result};
use crate::linalg::{dot, SquareMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct VawForecaster<T> {
    inverse_gram: SquareMatrix<T>,
    moment: Vec<T>,
    ridge: T,
    rounds: usize,
}

impl<T: Scalar> VawForecaster<T> {
    pub fn new(dim: usize, ridge: T) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("VAW dimension must be at least 1"));
        }
        if !(ridge > T::zero()) || !ridge.is_finite() {
            return Err(Error::config(format!("VAW ridge {ridge} must be finite and > 0")));
        }
        Ok(Self {
            inverse_gram: SquareMatrix::scaled_identity(dim, T::one() / ridge),
            moment: vec![T::zero(); dim],
            ridge,
            rounds: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }

    pub fn ridge(&self) -> T {
        self.ridge
    }

    pub fn inverse_gram(&self) -> &SquareMatrix<T> {
        &self.inverse_gram
    }

    pub fn moment(&self) -> &[T] {
        &self.moment
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Ridge estimate `(λI + Σ x_s x_sᵀ)⁻¹ Σ y_s x_s`.
    pub fn ridge_estimate(&self) -> Vec<T> {
        self.inverse_gram.mul_vec(&self.moment)
    }

    /// Unclipped VAW prediction at feature vector `x`.
    pub fn predict_features(&self, x: &[T]) -> Result<T> {
        check_dim(x, self.dim())?;
        let px = self.inverse_gram.mul_vec(x);
        let denom = T::one() + dot(x, &px);
        Ok(dot(&px, &self.moment) / denom)
    }

    fn absorb(&mut self, x: &[T], y: T) -> Result<()> {
        check_dim(x, self.dim())?;
        self.inverse_gram.sherman_morrison_add(x);
        for (m, &xi) in self.moment.iter_mut().zip(x) {
            *m = *m + y * xi;
        }
        self.rounds += 1;
        Ok(())
    }
}

impl<T: Scalar> RegressionOracle<T> for VawForecaster<T> {
    fn predict_raw(&self, context: &Context<T>, action: &Action<T>) -> Result<T> {
        self.predict_features(feature_vector(context, action)?)
    }

    fn update(&mut self, example: &OracleExample<'_, T>) -> Result<()> {
        check_unit_outcome(example.outcome)?;
        let x = feature_vector(example.context, example.action)?;
        self.absorb(x, example.outcome)
    }

    fn budget(&self, horizon: usize) -> OracleRegretBudget<T> {
        OracleRegretBudget::vaw(self.dim(), horizon)
    }

    fn guarantee(&self) -> Guarantee {
        Guarantee::AdversarialRegret
    }

    fn name(&self) -> &'static str {
        "vaw"
    }
}

impl<T: Scalar> VectorOracle<T> for VawForecaster<T> {
    fn dim(&self) -> usize {
        self.moment.len()
    }

    /// Over ball actions the linear functional is the ridge estimate.
    fn predict_vector(&self, _context: &Context<T>) -> Result<Vec<T>> {
        Ok(self.ridge_estimate())
    }

    fn update_vector(&mut self, _context: &Context<T>, action: &[T], loss: T) -> Result<()> {
        check_signed_loss(loss)?;
        self.absorb(action, loss)
    }

    fn budget(&self, horizon: usize) -> OracleRegretBudget<T> {
        OracleRegretBudget::vaw(self.moment.len(), horizon)
    }

    fn name(&self) -> &'static str {
        "vaw"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx1(x: f64) -> Context<f64> {
        Context::with_features(0, vec![vec![x]])
    }

    #[test]
    fn empty_history_predicts_zero() {
        let o = VawForecaster::<f64>::new(3, 1.0).unwrap();
        let ctx = Context::with_features(0, vec![vec![0.2, -0.5, 0.1]]);
        assert_eq!(o.predict(&ctx, &Action::Arm(0)).unwrap(), 0.0);
    }

    #[test]
    fn one_example_near_zero_ridge() {
        // x = 1, y = 1 seen once; query x = 1: 1 · (1 + 1)⁻¹ · 1.
        let mut o = VawForecaster::<f64>::new(1, 1e-12).unwrap();
        let c = ctx1(1.0);
        o.update(&OracleExample::new(&c, &Action::Arm(0), 1.0)).unwrap();
        assert!((o.predict(&c, &Action::Arm(0)).unwrap() - 0.5).abs() < 1e-9);

        let mut unit = VawForecaster::<f64>::new(1, 1.0).unwrap();
        unit.update(&OracleExample::new(&c, &Action::Arm(0), 1.0)).unwrap();
        assert!((unit.predict(&c, &Action::Arm(0)).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(VawForecaster::<f64>::new(0, 1.0).is_err());
        assert!(VawForecaster::<f64>::new(2, 0.0).is_err());
        let o = VawForecaster::<f64>::new(2, 1.0).unwrap();
        let err = o.predict(&ctx1(0.5), &Action::Arm(0)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn predictions_clipped_to_unit_interval() {
        let mut o = VawForecaster::<f64>::new(1, 0.01).unwrap();
        let c = ctx1(1.0);
        for _ in 0..50 {
            o.update(&OracleExample::new(&c, &Action::Arm(0), 1.0)).unwrap();
        }
        let neg = ctx1(-1.0);
        assert!(o.predict_raw(&neg, &Action::Arm(0)).unwrap() < 0.0);
        assert_eq!(o.predict(&neg, &Action::Arm(0)).unwrap(), 0.0);
    }
}
