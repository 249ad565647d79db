//! SquareCB over the unit ball of `R^d`.
//!
//! With `α = min(β/‖ŷ‖, 1/2)` and `ỹ = ŷ/‖ŷ‖`, the learner plays `-ỹ` with
//! probability `1 - α` and a uniformly chosen signed basis vector `±e_i`
//! otherwise. Both branches emit unit vectors, so the action moments are
//! `μ = -(1 - α) ỹ` and `Σ = (1 - α) ỹỹᵀ + (α/d) I`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::BallEnvironment;
use crate::error::{Error, Result};
use crate::ledger::{ChosenAction, RegretLedger};
use crate::linalg::{dot, norm2, SquareMatrix};
use crate::oracle::{OracleRegretBudget, VectorOracle};
use crate::rng::{stream, Stream};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HilbertParams<T> {
    pub beta: T,
    pub dim: usize,
}

impl<T: Scalar> HilbertParams<T> {
    pub fn new(dim: usize, beta: T) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("ball dimension must be at least 1"));
        }
        if !(beta > T::zero()) {
            return Err(Error::config(format!("β = {beta} must be positive")));
        }
        Ok(Self { beta, dim })
    }
}

/// A point of the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallAction<T> {
    pub vector: Vec<T>,
}

impl<T: Scalar> BallAction<T> {
    pub fn new(vector: Vec<T>) -> Result<Self> {
        if norm2(&vector) > T::one() + T::lit(1e-12) {
            return Err(Error::validation("ball action has norm above 1"));
        }
        Ok(Self { vector })
    }
}

/// One draw with its branch and exact probability mass.
#[derive(Debug, Clone, PartialEq)]
pub struct BallSample<T> {
    pub action: BallAction<T>,
    pub explored: bool,
    /// Probability of this exact vector under the action distribution.
    pub mass: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentPair<T> {
    pub mean: Vec<T>,
    pub second_moment: SquareMatrix<T>,
}

/// `(α, ỹ)`; `ŷ = 0` gives `α = 1/2`, `ỹ = e₁`.
pub fn exploration_split<T: Scalar>(yhat: &[T], beta: T) -> (T, Vec<T>) {
    let half = T::lit(0.5);
    let n = norm2(yhat);
    if n == T::zero() {
        let mut e1 = vec![T::zero(); yhat.len()];
        e1[0] = T::one();
        return (half, e1);
    }
    ((beta / n).min(half), yhat.iter().map(|&v| v / n).collect())
}

fn atom_mass<T: Scalar>(action: &[T], alpha: T, unit: &[T]) -> T {
    let d = action.len();
    let mut mass = T::zero();
    if action.iter().zip(unit).all(|(&a, &u)| a == -u) {
        mass = mass + (T::one() - alpha);
    }
    let nonzero: Vec<usize> = (0..d).filter(|&i| action[i] != T::zero()).collect();
    if nonzero.len() == 1 && action[nonzero[0]].abs() == T::one() {
        mass = mass + alpha / (T::lit(2.0) * T::from_count(d));
    }
    mass
}

/// Draws an action: one uniform for the branch, then an index and a sign when exploring.
pub fn hilbert_sample<T: Scalar, R: Rng>(yhat: &[T], beta: T, rng: &mut R) -> Result<BallSample<T>> {
    if yhat.is_empty() {
        return Err(Error::config("ball dimension must be at least 1"));
    }
    if !(beta > T::zero()) {
        return Err(Error::config("β must be positive"));
    }
    let (alpha, unit) = exploration_split(yhat, beta);
    let u: f64 = rng.random();
    let (vector, explored) = if u < (T::one() - alpha).to_f64_lossy() {
        (unit.iter().map(|&v| -v).collect::<Vec<T>>(), false)
    } else {
        let i = rng.random_range(0..yhat.len());
        let sign = if rng.random::<bool>() { T::one() } else { -T::one() };
        let mut v = vec![T::zero(); yhat.len()];
        v[i] = sign;
        (v, true)
    };
    let mass = atom_mass(&vector, alpha, &unit);
    Ok(BallSample {
        action: BallAction { vector },
        explored,
        mass,
    })
}

pub fn hilbert_moments<T: Scalar>(yhat: &[T], beta: T) -> MomentPair<T> {
    let d = yhat.len();
    let (alpha, unit) = exploration_split(yhat, beta);
    let keep = T::one() - alpha;
    let mean = unit.iter().map(|&v| -keep * v).collect();
    let mut second_moment = SquareMatrix::scaled_identity(d, alpha / T::from_count(d));
    second_moment.add_outer(&unit, keep);
    MomentPair { mean, second_moment }
}

/// `β = √(d (RegSq + 8 ln(1/δ)) / T)`.
pub fn tune_beta<T: Scalar>(dim: usize, horizon: usize, budget: &OracleRegretBudget<T>, delta: T) -> Result<T> {
    if horizon == 0 {
        return Err(Error::config("horizon must be positive"));
    }
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::config("δ must lie in (0, 1)"));
    }
    if !(budget.bound >= T::zero()) {
        return Err(Error::validation("regret budget must be >= 0"));
    }
    let num = T::from_count(dim) * (budget.bound + T::lit(8.0) * (T::one() / delta).ln());
    Ok((num / T::from_count(horizon)).sqrt())
}

/// `18√(d T·RegSq) + 90√(d T ln(1/δ))`.
pub fn hilbert_bound(dim: usize, horizon: usize, reg_sq: f64, delta: f64) -> f64 {
    let dt = (dim * horizon) as f64;
    18.0 * (dt * reg_sq).sqrt() + 90.0 * (dt * (1.0 / delta).ln()).sqrt()
}

/// Exact expected instantaneous regret `⟨μ, f⋆⟩ + ‖f⋆‖` and the bound
/// `9β + (4d/β)‖ŷ - f⋆‖²_Σ`.
pub fn round_certificate<T: Scalar>(yhat: &[T], fstar: &[T], beta: T) -> (T, T) {
    let m = hilbert_moments(yhat, beta);
    let regret = dot(&m.mean, fstar) + norm2(fstar);
    let diff: Vec<T> = yhat.iter().zip(fstar).map(|(&a, &b)| a - b).collect();
    let d = T::from_count(yhat.len());
    let bound = T::lit(9.0) * beta + T::lit(4.0) * d / beta * m.second_moment.quad_form(&diff);
    (regret, bound)
}

/// Runs the ball variant for `horizon` rounds against a constant-`θ⋆` environment.
///
/// The oracle regresses raw losses in `[-1, 1]`. Prediction vectors with
/// norm above 1 are rescaled onto the sphere and counted.
pub fn run_squarecb_hilbert<O: VectorOracle<f64> + ?Sized>(
    env: &BallEnvironment,
    oracle: &mut O,
    params: &HilbertParams<f64>,
    horizon: usize,
    seed: u64,
) -> Result<RegretLedger> {
    if env.dim() != params.dim || oracle.dim() != params.dim {
        return Err(Error::config("ball dimension mismatch between environment, oracle and parameters"));
    }
    let mut noise_rng = stream(seed, Stream::Noise);
    let mut act_rng = stream(seed, Stream::Actions);
    let ctx = env.context();
    let theta_norm = norm2(&env.theta_star);
    let best: Vec<f64> = if theta_norm > 0.0 {
        env.theta_star.iter().map(|v| -v / theta_norm).collect()
    } else {
        let mut e = vec![0.0; env.dim()];
        e[0] = -1.0;
        e
    };
    let mut ledger = RegretLedger::with_capacity(horizon);
    for _ in 1..=horizon {
        let mut yhat = oracle.predict_vector(&ctx)?;
        if yhat.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("oracle returned a non-finite prediction"));
        }
        let n = norm2(&yhat);
        if n > 1.0 {
            yhat.iter_mut().for_each(|v| *v /= n);
            ledger.rescaled_predictions += 1;
        }
        let draw = hilbert_sample(&yhat, params.beta, &mut act_rng)?;
        let a = draw.action.vector;
        let noise = env.sample_noise(&mut noise_rng);
        let loss = env.loss(&a, noise);
        let pseudo = env.pseudo_regret(&a);
        ledger.record(
            ChosenAction::Vector(a.clone()),
            loss,
            loss - env.loss(&best, noise),
            pseudo,
            draw.mass,
        );
        oracle.update_vector(&ctx, &a, loss)?;
    }
    Ok(ledger)
}
