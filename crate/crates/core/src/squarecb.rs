//! SquareCB: inverse-gap-weighted action selection driven by an online
//! square-loss regression oracle.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::EnvironmentInstance;
use crate::error::{Error, Result};
use crate::ledger::{ChosenAction, RegretLedger};
use crate::oracle::{Action, OracleExample, OracleRegretBudget, RegressionOracle};
use crate::rng::{stream, Stream};
use crate::scalar::Scalar;

/// Oracle predictions `ŷ_t(x_t, ·)` for every arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector<T> {
    scores: Vec<T>,
}

impl<T: Scalar> ScoreVector<T> {
    pub fn new(scores: Vec<T>) -> Result<Self> {
        if scores.len() < 2 {
            return Err(Error::config("need at least two arms"));
        }
        if let Some(s) = scores.iter().find(|s| !(**s >= T::zero() && **s <= T::one())) {
            return Err(Error::validation(format!("score {s} outside [0, 1]")));
        }
        Ok(Self { scores })
    }

    /// Clips raw predictions into `[0, 1]`, returning how many were moved.
    pub fn from_raw(raw: Vec<T>) -> Result<(Self, usize)> {
        if raw.iter().any(|s| s.is_nan()) {
            return Err(Error::numeric("oracle returned NaN"));
        }
        let moved = raw.iter().filter(|s| **s < T::zero() || **s > T::one()).count();
        let scores = raw.into_iter().map(Scalar::clamp01).collect();
        Ok((Self::new(scores)?, moved))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// `argmin_a ŷ_a`, lowest index on ties.
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (a, &s) in self.scores.iter().enumerate().skip(1) {
            if s < self.scores[best] {
                best = a;
            }
        }
        best
    }
}

/// Learning rate `γ` and exploration parameter `μ` for `K` arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplorationParams<T> {
    pub gamma: T,
    pub mu: T,
    pub arms: usize,
}

impl<T: Scalar> ExplorationParams<T> {
    /// `μ = K`.
    pub fn new(arms: usize, gamma: T) -> Result<Self> {
        Self::with_mu(arms, gamma, T::from_count(arms))
    }

    /// Rejects `μ < K - 1`, which could leave the greedy arm with negative mass.
    pub fn with_mu(arms: usize, gamma: T, mu: T) -> Result<Self> {
        if arms < 2 {
            return Err(Error::config("need at least two arms"));
        }
        if !(gamma > T::zero()) {
            return Err(Error::config(format!("γ = {gamma} must be positive")));
        }
        if !(mu >= T::from_count(arms - 1)) {
            return Err(Error::config(format!("μ = {mu} is below K - 1 = {}", arms - 1)));
        }
        Ok(Self { gamma, mu, arms })
    }
}

/// Distribution over arms with its greedy arm `b_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution<T> {
    pub probs: Vec<T>,
    pub greedy_arm: usize,
}

impl<T: Scalar> ActionDistribution<T> {
    /// Inverse-CDF draw from one uniform on the action stream.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = self.greedy_arm;
        for (a, p) in self.probs.iter().enumerate() {
            let p = p.to_f64_lossy();
            if p > 0.0 {
                acc += p;
                last = a;
                if u < acc {
                    return a;
                }
            }
        }
        last
    }

    pub fn uniform(arms: usize) -> Self {
        Self {
            probs: vec![T::one() / T::from_count(arms); arms],
            greedy_arm: 0,
        }
    }
}

/// `p_a = 1/(μ + γ(ŷ_a - ŷ_b))` off the greedy arm `b`; `b` takes the rest.
pub fn inverse_gap_distribution<T: Scalar>(
    scores: &ScoreVector<T>,
    params: &ExplorationParams<T>,
) -> Result<ActionDistribution<T>> {
    if scores.len() != params.arms {
        return Err(Error::config(format!(
            "{} scores for {} arms",
            scores.len(),
            params.arms
        )));
    }
    let s = scores.as_slice();
    let b = scores.argmin();
    let mut probs = vec![T::zero(); s.len()];
    let mut rest = T::zero();
    for (a, p) in probs.iter_mut().enumerate() {
        if a != b {
            *p = T::one() / (params.mu + params.gamma * (s[a] - s[b]));
            rest = rest + *p;
        }
    }
    probs[b] = (T::one() - rest).max(T::zero());
    Ok(ActionDistribution { probs, greedy_arm: b })
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::config("horizon must be positive"));
    }
    Ok(())
}

fn check_delta<T: Scalar>(delta: T) -> Result<()> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::config(format!("δ = {delta} must lie in (0, 1)")));
    }
    Ok(())
}

/// `γ = √(KT / (RegSq + ln(2/δ)))`.
pub fn tune_gamma_realizable<T: Scalar>(
    arms: usize,
    horizon: usize,
    budget: &OracleRegretBudget<T>,
    delta: T,
) -> Result<T> {
    check_horizon(horizon)?;
    check_delta(delta)?;
    if !(budget.bound >= T::zero()) {
        return Err(Error::validation("regret budget must be >= 0"));
    }
    let kt = T::from_count(arms) * T::from_count(horizon);
    Ok((kt / (budget.bound + (T::lit(2.0) / delta).ln())).sqrt())
}

/// Adversary model for the misspecified tunings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adversary {
    /// Contexts drawn i.i.d.: `γ = 2√(KT/(RegSq + ε²T))`.
    Stochastic,
    /// Adaptive contexts: `γ = √(8KT/(RegSq + ε²T))`.
    Adaptive,
}

pub fn tune_gamma_misspecified<T: Scalar>(
    arms: usize,
    horizon: usize,
    budget: &OracleRegretBudget<T>,
    epsilon: T,
    adversary: Adversary,
) -> Result<T> {
    check_horizon(horizon)?;
    if !(epsilon >= T::zero()) {
        return Err(Error::config("misspecification level must be >= 0"));
    }
    if !(budget.bound >= T::zero()) {
        return Err(Error::validation("regret budget must be >= 0"));
    }
    let t = T::from_count(horizon);
    let kt = T::from_count(arms) * t;
    let denom = budget.bound + epsilon * epsilon * t;
    if !(denom > T::zero()) {
        return Err(Error::numeric("RegSq + ε²T is zero; γ would be infinite"));
    }
    Ok(match adversary {
        Adversary::Stochastic => T::lit(2.0) * (kt / denom).sqrt(),
        Adversary::Adaptive => (T::lit(8.0) * kt / denom).sqrt(),
    })
}

/// `4√(KT·RegSq) + 8√(KT ln(2/δ))`.
pub fn realizable_bound(arms: usize, horizon: usize, reg_sq: f64, delta: f64) -> f64 {
    let kt = (arms * horizon) as f64;
    4.0 * (kt * reg_sq).sqrt() + 8.0 * (kt * (2.0 / delta).ln()).sqrt()
}

/// Stochastic: `2√(KT·RegSq) + 4ε√K·T`; adaptive: `√(2KT·RegSq) + ε√(2K)·T`.
pub fn misspecified_bound(arms: usize, horizon: usize, reg_sq: f64, epsilon: f64, adversary: Adversary) -> f64 {
    let k = arms as f64;
    let t = horizon as f64;
    match adversary {
        Adversary::Stochastic => 2.0 * (k * t * reg_sq).sqrt() + epsilon * 4.0 * k.sqrt() * t,
        Adversary::Adaptive => (2.0 * k * t * reg_sq).sqrt() + epsilon * (2.0 * k).sqrt() * t,
    }
}

fn oracle_scores<O: RegressionOracle<f64> + ?Sized>(
    oracle: &O,
    ctx: &crate::oracle::Context<f64>,
    arms: usize,
) -> Result<(ScoreVector<f64>, usize)> {
    let raw = (0..arms)
        .map(|a| oracle.predict_raw(ctx, &Action::Arm(a)))
        .collect::<Result<Vec<_>>>()?;
    ScoreVector::from_raw(raw)
}

/// Runs SquareCB for `horizon` rounds.
///
/// Contexts, loss noise and action draws come from separate streams of `seed`.
/// The oracle only sees the chosen arm's loss.
pub fn run_squarecb<O: RegressionOracle<f64> + ?Sized>(
    env: &EnvironmentInstance,
    oracle: &mut O,
    params: &ExplorationParams<f64>,
    horizon: usize,
    seed: u64,
) -> Result<RegretLedger> {
    if env.arms != params.arms {
        return Err(Error::config(format!(
            "environment has {} arms, parameters {}",
            env.arms, params.arms
        )));
    }
    let mut ctx_rng = stream(seed, Stream::Contexts);
    let mut noise_rng = stream(seed, Stream::Noise);
    let mut act_rng = stream(seed, Stream::Actions);
    let mut ledger = RegretLedger::with_capacity(horizon);
    let mut losses = Vec::with_capacity(env.arms);
    for t in 1..=horizon {
        let x = env.context_index(t, &mut ctx_rng);
        let ctx = env.context(x);
        let (scores, clipped) = oracle_scores(oracle, ctx, env.arms)?;
        ledger.clipped_predictions += clipped;
        let dist = inverse_gap_distribution(&scores, params)?;
        let a = dist.sample(&mut act_rng);
        env.sample_losses(x, t, &mut noise_rng, &mut losses);
        let (best, best_mean) = env.best_arm(x, t);
        let loss = losses[a];
        ledger.record(
            ChosenAction::Arm(a),
            loss,
            loss - losses[best],
            env.mean(x, a, t) - best_mean,
            dist.probs[a],
        );
        oracle.update(&OracleExample::new(ctx, &Action::Arm(a), loss))?;
    }
    Ok(ledger)
}

/// Exploration rate `ε_t = min(1, (K/t)^{1/3})` of the ε-greedy baseline.
pub fn epsilon_greedy_rate(arms: usize, round: usize) -> f64 {
    (arms as f64 / round as f64).cbrt().min(1.0)
}

/// ε-greedy reference: uniform with probability `ε_t`, else `argmin ŷ`.
pub fn run_epsilon_greedy<O: RegressionOracle<f64> + ?Sized>(
    env: &EnvironmentInstance,
    oracle: &mut O,
    horizon: usize,
    seed: u64,
) -> Result<RegretLedger> {
    if env.arms < 2 {
        return Err(Error::config("need at least two arms"));
    }
    let k = env.arms;
    let mut ctx_rng = stream(seed, Stream::Contexts);
    let mut noise_rng = stream(seed, Stream::Noise);
    let mut act_rng = stream(seed, Stream::Actions);
    let mut ledger = RegretLedger::with_capacity(horizon);
    let mut losses = Vec::with_capacity(k);
    for t in 1..=horizon {
        let x = env.context_index(t, &mut ctx_rng);
        let ctx = env.context(x);
        let (scores, clipped) = oracle_scores(oracle, ctx, k)?;
        ledger.clipped_predictions += clipped;
        let eps = epsilon_greedy_rate(k, t);
        let greedy = scores.argmin();
        let mut probs = vec![eps / k as f64; k];
        probs[greedy] += 1.0 - eps;
        let dist = ActionDistribution {
            probs,
            greedy_arm: greedy,
        };
        let a = dist.sample(&mut act_rng);
        env.sample_losses(x, t, &mut noise_rng, &mut losses);
        let (best, best_mean) = env.best_arm(x, t);
        let loss = losses[a];
        ledger.record(
            ChosenAction::Arm(a),
            loss,
            loss - losses[best],
            env.mean(x, a, t) - best_mean,
            dist.probs[a],
        );
        oracle.update(&OracleExample::new(ctx, &Action::Arm(a), loss))?;
    }
    Ok(ledger)
}
