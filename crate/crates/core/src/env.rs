//! Ground-truth environments.
//!
//! A finite-action environment is a pool of enumerated contexts, a table of
//! mean losses `f⋆(x, a)` (computed once for linear and GLM truths), an
//! optional misspecification perturbation, a noise model and a context
//! schedule. Instances are immutable; all randomness comes from the caller's
//! streams, so a run is a pure function of its seed.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::Link;
use crate::linalg::{dot, norm2};
use crate::oracle::{Context, FiniteClass};
use crate::rng::{counter_uniform, stream, Stream};

/// Observation noise around the mean loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    None,
    /// `ℓ ~ Bernoulli(f)`.
    Bernoulli,
    /// `ℓ = f + clip(N(0, σ²), ±min(f, 1 - f))`; symmetric clipping keeps the mean.
    ClippedGaussian { sigma: f64 },
}

/// How `x_t` is chosen from the context pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContextSource {
    /// Uniform over the pool, drawn from the context stream.
    Iid,
    /// Context `j` on rounds `j·len + 1 ..= (j+1)·len`, cycling.
    BlockSchedule { block_len: usize },
    /// A fixed sequence of pool indices, cycled.
    Script { sequence: Vec<usize> },
}

/// What generated the mean table; kept for auditing and replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TruthSpec {
    Table,
    Linear { theta_star: Vec<f64> },
    Glm { link: Link, theta_star: Vec<f64>, c_sigma: f64 },
}

/// Perturbation `ε_t(x, a)` with `|ε_t| ≤ level`, clipped so means stay in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Misspecification {
    pub level: f64,
    /// Fixed table `ε(x, a)`, used when `time_varying` is false.
    pub table: Vec<f64>,
    pub time_varying: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentInstance {
    pub arms: usize,
    pub contexts: Vec<Context<f64>>,
    /// `means[x * arms + a] = f⋆(x, a)` of the realizable part.
    pub means: Vec<f64>,
    pub truth: TruthSpec,
    pub noise: NoiseModel,
    pub context_source: ContextSource,
    #[serde(default)]
    pub misspecification: Option<Misspecification>,
}

impl EnvironmentInstance {
    pub fn new(
        arms: usize,
        contexts: Vec<Context<f64>>,
        means: Vec<f64>,
        truth: TruthSpec,
        noise: NoiseModel,
        context_source: ContextSource,
    ) -> Result<Self> {
        let env = Self {
            arms,
            contexts,
            means,
            truth,
            noise,
            context_source,
            misspecification: None,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms < 1 || self.contexts.is_empty() {
            return Err(Error::config("environment needs at least one arm and one context"));
        }
        if self.means.len() != self.arms * self.contexts.len() {
            return Err(Error::config("mean table size does not match contexts x arms"));
        }
        if self.means.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::validation("mean losses must lie in [0, 1]"));
        }
        match &self.context_source {
            ContextSource::BlockSchedule { block_len: 0 } => {
                return Err(Error::config("block length must be positive"));
            }
            ContextSource::Script { sequence } => {
                if sequence.is_empty() || sequence.iter().any(|&x| x >= self.contexts.len()) {
                    return Err(Error::config("context script is empty or out of range"));
                }
            }
            _ => {}
        }
        if let NoiseModel::ClippedGaussian { sigma } = self.noise {
            if !(sigma >= 0.0) || !sigma.is_finite() {
                return Err(Error::config("noise scale must be finite and >= 0"));
            }
        }
        if let Some(m) = &self.misspecification {
            if !(0.0..=0.25).contains(&m.level) {
                return Err(Error::config("misspecification level must lie in [0, 1/4]"));
            }
            if !m.time_varying && m.table.len() != self.means.len() {
                return Err(Error::config("misspecification table size mismatch"));
            }
        }
        Ok(())
    }

    pub fn num_contexts(&self) -> usize {
        self.contexts.len()
    }

    /// Pool index of `x_t` for round `t` (1-based).
    pub fn context_index<R: Rng>(&self, round: usize, rng: &mut R) -> usize {
        match &self.context_source {
            ContextSource::Iid => rng.random_range(0..self.contexts.len()),
            ContextSource::BlockSchedule { block_len } => ((round - 1) / block_len) % self.contexts.len(),
            ContextSource::Script { sequence } => sequence[(round - 1) % sequence.len()],
        }
    }

    pub fn context(&self, index: usize) -> &Context<f64> {
        &self.contexts[index]
    }

    /// Realizable part `f⋆(x, a)`.
    #[inline]
    pub fn base_mean(&self, x: usize, a: usize) -> f64 {
        self.means[x * self.arms + a]
    }

    /// True mean loss at round `t`, including any misspecification.
    pub fn mean(&self, x: usize, a: usize, round: usize) -> f64 {
        let base = self.base_mean(x, a);
        match &self.misspecification {
            None => base,
            Some(m) if m.time_varying => {
                let u = counter_uniform(&[m.seed, round as u64, x as u64, a as u64]);
                (base + m.level * (2.0 * u - 1.0)).clamp(0.0, 1.0)
            }
            Some(m) => (base + m.table[x * self.arms + a]).clamp(0.0, 1.0),
        }
    }

    /// Best arm under the true means (lowest index on ties) and its mean.
    pub fn best_arm(&self, x: usize, round: usize) -> (usize, f64) {
        let mut best = (0, self.mean(x, 0, round));
        for a in 1..self.arms {
            let m = self.mean(x, a, round);
            if m < best.1 {
                best = (a, m);
            }
        }
        best
    }

    /// Draws the loss of every arm at `(x, t)`, in arm order, from `rng`.
    pub fn sample_losses<R: Rng>(&self, x: usize, round: usize, rng: &mut R, out: &mut Vec<f64>) {
        out.clear();
        for a in 0..self.arms {
            let f = self.mean(x, a, round);
            out.push(sample_noisy(&self.noise, f, rng));
        }
    }

    /// Whether any perturbation separates the true means from `f⋆`.
    pub fn is_misspecified(&self) -> bool {
        self.misspecification.as_ref().is_some_and(|m| m.level > 0.0)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let env: Self = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        env.validate()?;
        Ok(env)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

fn sample_noisy<R: Rng>(noise: &NoiseModel, f: f64, rng: &mut R) -> f64 {
    match noise {
        NoiseModel::None => f,
        NoiseModel::Bernoulli => {
            if rng.random::<f64>() < f {
                1.0
            } else {
                0.0
            }
        }
        NoiseModel::ClippedGaussian { sigma } => {
            let z: f64 = Normal::new(0.0, *sigma).expect("validated scale").sample(rng);
            let r = f.min(1.0 - f);
            f + z.clamp(-r, r)
        }
    }
}

fn tabular_contexts(n: usize) -> Vec<Context<f64>> {
    (0..n).map(Context::tabular).collect()
}

/// Random realizable finite-class environment.
///
/// Draws `class_size` tables uniform on `[0, 1]` over `contexts × arms`,
/// designates one member as `f⋆`, serves contexts iid with Bernoulli losses.
pub fn make_finite_class_env(
    arms: usize,
    class_size: usize,
    contexts: usize,
    seed: u64,
) -> Result<(EnvironmentInstance, FiniteClass<f64>, usize)> {
    if class_size == 0 {
        return Err(Error::config("class size must be at least 1"));
    }
    if arms < 2 || contexts == 0 {
        return Err(Error::config("need at least 2 arms and 1 context"));
    }
    let mut rng = stream(seed, Stream::Instance);
    let tables: Vec<Vec<f64>> = (0..class_size)
        .map(|_| (0..contexts * arms).map(|_| rng.random::<f64>()).collect())
        .collect();
    let star = rng.random_range(0..class_size);
    let env = EnvironmentInstance::new(
        arms,
        tabular_contexts(contexts),
        tables[star].clone(),
        TruthSpec::Table,
        NoiseModel::Bernoulli,
        ContextSource::Iid,
    )?;
    Ok((env, FiniteClass::new(contexts, arms, tables)?, star))
}

/// Adds a bounded perturbation of level `epsilon` to a realizable environment.
///
/// The fixed table draws `ε(x, a)` uniform on `[-ε, ε]` and then clips so
/// `f⋆ + ε(x, a) ∈ [0, 1]`. The time-varying form draws `ε_t(x, a)` from a
/// counter hash of `(seed, t, x, a)`.
pub fn make_misspecified_env(
    base: &EnvironmentInstance,
    epsilon: f64,
    perturbation_seed: u64,
    time_varying: bool,
) -> Result<EnvironmentInstance> {
    if !(0.0..=0.25).contains(&epsilon) {
        return Err(Error::config(format!("misspecification level {epsilon} outside [0, 1/4]")));
    }
    if base.misspecification.is_some() {
        return Err(Error::config("base environment is already misspecified"));
    }
    let mut env = base.clone();
    if epsilon == 0.0 {
        return Ok(env);
    }
    let mut rng = stream(perturbation_seed, Stream::Instance);
    let table = if time_varying {
        Vec::new()
    } else {
        base.means
            .iter()
            .map(|&m| {
                let e = epsilon * (2.0 * rng.random::<f64>() - 1.0);
                (m + e).clamp(0.0, 1.0) - m
            })
            .collect()
    };
    env.misspecification = Some(Misspecification {
        level: epsilon,
        table,
        time_varying,
        seed: perturbation_seed,
    });
    env.validate()?;
    Ok(env)
}

fn random_in_ball<R: Rng>(dim: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut v: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
    let n = norm2(&v);
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x *= r / n;
        }
    }
    v
}

/// Realizable linear environment `f⋆(x, a) = ⟨θ⋆, x_a⟩`.
///
/// Features are `x_a = (1/√2, z_a)` with `‖z_a‖ ≤ 1/√2`, and
/// `θ⋆ = (1/√2, φ)` with `‖φ‖ ≤ 1/√2`, so `‖x_a‖, ‖θ⋆‖ ≤ 1` and every mean is
/// `1/2 + ⟨φ, z_a⟩ ∈ [0, 1]`. `dim ≥ 2` counts the constant coordinate.
pub fn make_linear_env(arms: usize, dim: usize, pool: usize, noise: NoiseModel, seed: u64) -> Result<EnvironmentInstance> {
    if dim < 2 || arms < 1 || pool == 0 {
        return Err(Error::config("linear environment needs dim >= 2, arms >= 1, pool >= 1"));
    }
    let mut rng = stream(seed, Stream::Instance);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut theta = vec![h];
    theta.extend(random_in_ball(dim - 1, h, &mut rng));
    let mut contexts = Vec::with_capacity(pool);
    let mut means = Vec::with_capacity(pool * arms);
    for id in 0..pool {
        let feats: Vec<Vec<f64>> = (0..arms)
            .map(|_| {
                let mut x = vec![h];
                x.extend(random_in_ball(dim - 1, h, &mut rng));
                x
            })
            .collect();
        for x in &feats {
            means.push(dot(&theta, x).clamp(0.0, 1.0));
        }
        contexts.push(Context::with_features(id, feats));
    }
    EnvironmentInstance::new(
        arms,
        contexts,
        means,
        TruthSpec::Linear { theta_star: theta },
        noise,
        ContextSource::Iid,
    )
}

/// Realizable GLM environment `f⋆(x, a) = σ(⟨θ⋆, x_a⟩)` with features and `θ⋆`
/// drawn uniformly from the unit ball.
pub fn make_glm_env(
    arms: usize,
    dim: usize,
    pool: usize,
    link: Link,
    noise: NoiseModel,
    seed: u64,
) -> Result<EnvironmentInstance> {
    link.validate()?;
    if dim == 0 || arms < 1 || pool == 0 {
        return Err(Error::config("GLM environment needs dim, arms and pool >= 1"));
    }
    let mut rng = stream(seed, Stream::Instance);
    let theta = random_in_ball(dim, 1.0, &mut rng);
    let mut contexts = Vec::with_capacity(pool);
    let mut means = Vec::with_capacity(pool * arms);
    for id in 0..pool {
        let feats: Vec<Vec<f64>> = (0..arms).map(|_| random_in_ball(dim, 1.0, &mut rng)).collect();
        for x in &feats {
            means.push(link.eval(dot(&theta, x)));
        }
        contexts.push(Context::with_features(id, feats));
    }
    let c_sigma = link.derivative_floor();
    EnvironmentInstance::new(
        arms,
        contexts,
        means,
        TruthSpec::Glm {
            link,
            theta_star: theta,
            c_sigma,
        },
        noise,
        ContextSource::Iid,
    )
}

/// Two-action lower-bound family with uniform gap `Δ` on `N` contexts.
///
/// Instance `0` plays `a₁` best everywhere. Instance `i ≥ 1` differs only at
/// context `i`, where `a₂` becomes best by `Δ`. Contexts arrive in `N`
/// consecutive blocks of equal length; there is no noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapInstanceFamily {
    pub contexts: usize,
    pub delta: f64,
    /// Horizon padded up to a multiple of `contexts`.
    pub horizon: usize,
    pub block_len: usize,
}

impl GapInstanceFamily {
    /// Number of instances, `N + 1`.
    pub fn len(&self) -> usize {
        self.contexts + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Mean-loss table of instance `i` (`i = 0` is the base instance).
    ///
    /// Context ids are 0-based, so instance `i` is special at id `i - 1`.
    pub fn table(&self, instance: usize) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.contexts * 2);
        for j in 0..self.contexts {
            t.push(0.5 - self.delta);
            if instance >= 1 && j == instance - 1 {
                t.push(0.5 - 2.0 * self.delta);
            } else {
                t.push(0.5);
            }
        }
        t
    }

    pub fn instance(&self, instance: usize) -> Result<EnvironmentInstance> {
        if instance > self.contexts {
            return Err(Error::config(format!("gap family has no instance {instance}")));
        }
        EnvironmentInstance::new(
            2,
            tabular_contexts(self.contexts),
            self.table(instance),
            TruthSpec::Table,
            NoiseModel::None,
            ContextSource::BlockSchedule {
                block_len: self.block_len,
            },
        )
    }

    /// The family as a finite class `{f_0, …, f_N}`.
    pub fn class(&self) -> FiniteClass<f64> {
        FiniteClass::new(self.contexts, 2, (0..self.len()).map(|i| self.table(i)).collect())
            .expect("gap tables lie in [0, 1]")
    }
}

/// `N = round(√(2T))` contexts, horizon padded to a multiple of `N`.
pub fn make_gap_family(horizon: usize, delta: f64) -> Result<GapInstanceFamily> {
    if horizon == 0 {
        return Err(Error::config("gap family horizon must be positive"));
    }
    if !(delta > 0.0 && delta <= 0.25) {
        return Err(Error::config(format!("gap {delta} must lie in (0, 1/4]")));
    }
    let n = ((2.0 * horizon as f64).sqrt().round() as usize).max(1);
    let padded = horizon.div_ceil(n) * n;
    Ok(GapInstanceFamily {
        contexts: n,
        delta,
        horizon: padded,
        block_len: padded / n,
    })
}

/// Ball-action environment with a constant `θ⋆`: `ℓ_t(a) = ⟨θ⋆, a⟩ + ξ_t`.
///
/// `ξ_t` is one Gaussian draw per round, clipped to `±(1 - ‖θ⋆‖)`, so every
/// loss lies in `[-1, 1]` and the noise cancels in realized regret.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallEnvironment {
    pub theta_star: Vec<f64>,
    pub noise_sigma: f64,
}

impl BallEnvironment {
    pub fn new(theta_star: Vec<f64>, noise_sigma: f64) -> Result<Self> {
        if theta_star.is_empty() {
            return Err(Error::config("ball environment needs dimension >= 1"));
        }
        if norm2(&theta_star) > 1.0 + 1e-12 {
            return Err(Error::validation("θ⋆ must lie in the unit ball"));
        }
        if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
            return Err(Error::config("noise scale must be finite and >= 0"));
        }
        Ok(Self { theta_star, noise_sigma })
    }

    /// `θ⋆` drawn uniformly on the sphere of radius `radius`.
    pub fn random(dim: usize, radius: f64, noise_sigma: f64, seed: u64) -> Result<Self> {
        if dim == 0 || !(0.0..=1.0).contains(&radius) {
            return Err(Error::config("ball environment needs dim >= 1 and radius in [0, 1]"));
        }
        let mut rng = stream(seed, Stream::Instance);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut v: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
        let n = norm2(&v);
        v.iter_mut().for_each(|x| *x *= radius / n);
        Self::new(v, noise_sigma)
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn context(&self) -> Context<f64> {
        Context::tabular(0)
    }

    /// `⟨θ⋆, a⟩ + ‖θ⋆‖`.
    pub fn pseudo_regret(&self, action: &[f64]) -> f64 {
        dot(&self.theta_star, action) + norm2(&self.theta_star)
    }

    /// One noise draw for the round.
    pub fn sample_noise<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.noise_sigma == 0.0 {
            return 0.0;
        }
        let r = (1.0 - norm2(&self.theta_star)).max(0.0);
        let z: f64 = Normal::new(0.0, self.noise_sigma).unwrap().sample(rng);
        z.clamp(-r, r)
    }

    pub fn loss(&self, action: &[f64], noise: f64) -> f64 {
        (dot(&self.theta_star, action) + noise).clamp(-1.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_family_small() {
        let g = make_gap_family(32, 0.25).unwrap();
        assert_eq!((g.contexts, g.block_len, g.horizon), (8, 4, 32));
        let env = g.instance(3).unwrap();
        let mut rng = stream(0, Stream::Contexts);
        let seq: Vec<usize> = (1..=12).map(|t| env.context_index(t, &mut rng)).collect();
        assert_eq!(seq, vec![0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
        assert_eq!(env.base_mean(2, 1), 0.0);
        assert_eq!(env.base_mean(0, 0), 0.25);
        assert_eq!(env.base_mean(0, 1), 0.5);
        assert!(make_gap_family(32, 0.3).is_err());
    }

    #[test]
    fn gap_family_pads_horizon() {
        let g = make_gap_family(30, 0.25).unwrap();
        assert_eq!(g.contexts, 8);
        assert_eq!(g.horizon, 32);
    }

    #[test]
    fn finite_env_tables_in_range() {
        let (env, class, star) = make_finite_class_env(5, 20, 10, 7).unwrap();
        assert_eq!(class.tables.len(), 20);
        assert_eq!(env.means, class.tables[star]);
        assert!(make_finite_class_env(5, 0, 10, 7).is_err());
        assert!(make_finite_class_env(5, 1, 10, 7).is_ok());
    }

    #[test]
    fn misspecification_is_bounded() {
        let (base, _, _) = make_finite_class_env(4, 5, 10, 1).unwrap();
        let env = make_misspecified_env(&base, 0.05, 9, false).unwrap();
        for x in 0..10 {
            for a in 0..4 {
                let d = (env.mean(x, a, 1) - base.mean(x, a, 1)).abs();
                assert!(d <= 0.05 + 1e-15);
                assert!((0.0..=1.0).contains(&env.mean(x, a, 1)));
            }
        }
        assert_eq!(make_misspecified_env(&base, 0.0, 9, false).unwrap(), base);
        let tv = make_misspecified_env(&base, 0.05, 9, true).unwrap();
        assert_ne!(tv.mean(0, 0, 1), tv.mean(0, 0, 2));
    }

    #[test]
    fn json_round_trip() {
        let env = make_linear_env(3, 4, 5, NoiseModel::ClippedGaussian { sigma: 0.1 }, 2).unwrap();
        let back = EnvironmentInstance::from_json(&env.to_json().unwrap()).unwrap();
        assert_eq!(env, back);
    }

    #[test]
    fn linear_features_and_means_in_range() {
        let env = make_linear_env(3, 5, 50, NoiseModel::None, 4).unwrap();
        for c in &env.contexts {
            for x in &c.features {
                assert!(norm2(x) <= 1.0 + 1e-12);
            }
        }
        if let TruthSpec::Linear { theta_star } = &env.truth {
            assert!(norm2(theta_star) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn clipped_gaussian_respects_range() {
        let mut rng = stream(5, Stream::Noise);
        let noise = NoiseModel::ClippedGaussian { sigma: 1.0 };
        for f in [0.0, 0.1, 0.5, 0.95, 1.0] {
            for _ in 0..200 {
                let y = sample_noisy(&noise, f, &mut rng);
                assert!((0.0..=1.0).contains(&y));
            }
        }
    }
}
