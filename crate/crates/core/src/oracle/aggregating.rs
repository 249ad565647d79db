//! Vovk's aggregating algorithm for the square loss over a finite class.
//!
//! The posterior is `P_t(f) ∝ exp(-η Σ_{s<t} (f(z_s) - y_s)²)` with a uniform
//! prior. Predictions use the substitution
//! `ŷ = clip((1 + Δ(0) - Δ(1)) / 2, 0, 1)` where
//! `Δ(y) = -(1/η) ln E_{f~P_t} exp(-η (f(z) - y)²)` is the mixture loss.

use super::{check_unit_outcome, Action, BudgetProvenance, Context, Guarantee, HypothesisClass};
use super::{OracleExample, OracleRegretBudget, RegressionOracle};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Learning rate giving the `2 ln |F|` regret bound.
pub const AGGREGATING_ETA: f64 = 0.5;

/// Substitution function mapping mixture losses at `y = 0` and `y = 1` to a prediction.
pub fn aggregating_substitution<T: Scalar>(delta0: T, delta1: T) -> Result<T> {
    if !delta0.is_finite() || !delta1.is_finite() {
        return Err(Error::numeric(format!(
            "non-finite mixture loss (Δ0 = {delta0}, Δ1 = {delta1})"
        )));
    }
    Ok(((T::one() + delta0 - delta1) * T::lit(0.5)).clamp01())
}

fn log_sum_exp<T: Scalar>(xs: impl Iterator<Item = T> + Clone) -> T {
    let m = xs.clone().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<T>().ln()
}

#[derive(Debug, Clone)]
pub struct AggregatingOracle<T, C> {
    class: C,
    eta: T,
    // Log weights minus `shift`; the largest entry is kept at zero.
    log_weights: Vec<T>,
    shift: T,
    log_norm: T,
}

impl<T: Scalar, C: HypothesisClass<T>> AggregatingOracle<T, C> {
    /// Uniform prior, `η = 1/2`.
    pub fn new(class: C) -> Result<Self> {
        Self::with_eta(class, T::lit(AGGREGATING_ETA))
    }

    pub fn with_eta(class: C, eta: T) -> Result<Self> {
        if class.is_empty() {
            return Err(Error::config("aggregating oracle needs a non-empty class"));
        }
        if !(eta > T::zero()) {
            return Err(Error::config("aggregating learning rate must be positive"));
        }
        let n = class.len();
        Ok(Self {
            class,
            eta,
            log_weights: vec![T::zero(); n],
            shift: T::zero(),
            log_norm: T::from_count(n).ln(),
        })
    }

    pub fn class(&self) -> &C {
        &self.class
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    /// Unnormalized log weight `-η Σ (f(z_s) - y_s)²` of member `i`.
    pub fn log_weight(&self, i: usize) -> T {
        self.log_weights[i] + self.shift
    }

    /// Normalized posterior `P_t`.
    pub fn posterior(&self) -> Vec<T> {
        self.log_weights.iter().map(|&l| (l - self.log_norm).exp()).collect()
    }

    fn mixture_loss_from(&self, values: &[T], y: T) -> T {
        let lse = log_sum_exp(
            self.log_weights
                .iter()
                .zip(values)
                .map(|(&l, &v)| l - self.eta * (v - y) * (v - y)),
        );
        -(lse - self.log_norm) / self.eta
    }

    /// Mixture loss `Δ(y)` at `(context, action)`.
    pub fn mixture_loss(&self, context: &Context<T>, action: &Action<T>, y: T) -> Result<T> {
        let mut values = Vec::with_capacity(self.class.len());
        self.class.values_at(context, action, &mut values)?;
        Ok(self.mixture_loss_from(&values, y))
    }
}

impl<T: Scalar, C: HypothesisClass<T>> RegressionOracle<T> for AggregatingOracle<T, C> {
    fn predict_raw(&self, context: &Context<T>, action: &Action<T>) -> Result<T> {
        let mut values = Vec::with_capacity(self.class.len());
        self.class.values_at(context, action, &mut values)?;
        let d0 = self.mixture_loss_from(&values, T::zero());
        let d1 = self.mixture_loss_from(&values, T::one());
        aggregating_substitution(d0, d1)
    }

    fn update(&mut self, example: &OracleExample<'_, T>) -> Result<()> {
        check_unit_outcome(example.outcome)?;
        let mut values = Vec::with_capacity(self.class.len());
        self.class.values_at(example.context, example.action, &mut values)?;
        let y = example.outcome;
        for (l, v) in self.log_weights.iter_mut().zip(&values) {
            *l = *l - self.eta * (*v - y) * (*v - y);
        }
        let m = self.log_weights.iter().copied().fold(T::neg_infinity(), T::max);
        if !m.is_finite() {
            return Err(Error::numeric("aggregating log weights became non-finite"));
        }
        for l in self.log_weights.iter_mut() {
            *l = *l - m;
        }
        self.shift = self.shift + m;
        self.log_norm = log_sum_exp(self.log_weights.iter().copied());
        Ok(())
    }

    fn budget(&self, _horizon: usize) -> OracleRegretBudget<T> {
        OracleRegretBudget {
            bound: T::lit(2.0) * T::from_count(self.class.len()).ln(),
            provenance: BudgetProvenance::FiniteClass2LnF,
        }
    }

    fn guarantee(&self) -> Guarantee {
        Guarantee::AdversarialRegret
    }

    fn name(&self) -> &'static str {
        "aggregating"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::FiniteClass;
    use rand::{Rng, SeedableRng};

    fn constants(values: &[f64]) -> FiniteClass<f64> {
        FiniteClass::new(1, 1, values.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    #[test]
    fn singleton_predicts_its_member() {
        let o = AggregatingOracle::new(constants(&[0.3])).unwrap();
        let p = o.predict(&Context::tabular(0), &Action::Arm(0)).unwrap();
        assert!((p - 0.3).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair_predicts_half() {
        let o = AggregatingOracle::new(constants(&[0.0, 1.0])).unwrap();
        let ctx = Context::tabular(0);
        let p = o.predict(&ctx, &Action::Arm(0)).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        // -2 ln((1 + e^{-1/2}) / 2), evaluated by hand.
        let d0 = o.mixture_loss(&ctx, &Action::Arm(0), 0.0).unwrap();
        let d1 = o.mixture_loss(&ctx, &Action::Arm(0), 1.0).unwrap();
        assert!((d0 - 0.438_140_392_76).abs() < 1e-10);
        assert!((d0 - d1).abs() < 1e-15);
    }

    #[test]
    fn update_subtracts_half_square_loss() {
        let mut o = AggregatingOracle::new(constants(&[0.2, 0.9])).unwrap();
        let ctx = Context::tabular(0);
        let a = Action::Arm(0);
        let before: Vec<f64> = (0..2).map(|i| o.log_weight(i)).collect();
        o.update(&OracleExample::new(&ctx, &a, 0.6)).unwrap();
        assert!((o.log_weight(0) - (before[0] - 0.16 / 2.0)).abs() < 1e-15);
        assert!((o.log_weight(1) - (before[1] - 0.09 / 2.0)).abs() < 1e-15);
        let post = o.posterior();
        assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_outcome() {
        let mut o = AggregatingOracle::new(constants(&[0.2])).unwrap();
        let ctx = Context::tabular(0);
        let err = o.update(&OracleExample::new(&ctx, &Action::Arm(0), 1.5)).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn substitution_examples() {
        assert_eq!(aggregating_substitution(0.3, 0.3).unwrap(), 0.5);
        for c in [0.0, 0.17, 0.5, 0.83, 1.0] {
            let y: f64 = aggregating_substitution(c * c, (c - 1.0) * (c - 1.0)).unwrap();
            assert!((y - c).abs() < 1e-12);
        }
        assert!(aggregating_substitution(f64::NAN, 0.0).is_err());
        assert!(aggregating_substitution(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn substitution_dominates_mixture_loss_on_grid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let n = rng.random_range(1..8);
            let vals: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let mut o = AggregatingOracle::new(constants(&vals)).unwrap();
            let ctx = Context::tabular(0);
            let a = Action::Arm(0);
            for _ in 0..rng.random_range(0..20) {
                let y: f64 = rng.random();
                o.update(&OracleExample::new(&ctx, &a, y)).unwrap();
            }
            let yhat = o.predict(&ctx, &a).unwrap();
            for k in 0..=100 {
                let y = k as f64 / 100.0;
                let delta = o.mixture_loss(&ctx, &a, y).unwrap();
                assert!((yhat - y).powi(2) <= delta + 1e-9, "y = {y}, yhat = {yhat}, delta = {delta}");
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let class = FiniteClass::<f32>::new(1, 1, vec![vec![0.25], vec![0.75]]).unwrap();
        let mut o = AggregatingOracle::new(class).unwrap();
        let ctx = Context::tabular(0);
        for _ in 0..200 {
            o.update(&OracleExample::new(&ctx, &Action::Arm(0), 0.25f32)).unwrap();
        }
        let p = o.predict(&ctx, &Action::Arm(0)).unwrap();
        assert!((p - 0.25).abs() < 1e-3);
    }
}
