//! Generalized linear model oracles: GLMtron and its online-Newton variant.
//!
//! Both regress `E[y | x] = σ(⟨θ⋆, x⟩)` for a known link `σ` with
//! `‖θ⋆‖₂ ≤ 1` and `‖x‖₂ ≤ 1`. Their guarantees bound prediction error to
//! `f⋆` under realizability, not adversarial regret.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, project_unit_ball, SquareMatrix};
use crate::oracle::{check_dim, check_unit_outcome, feature_vector};
use crate::oracle::{Action, Context, Guarantee, OracleExample, OracleRegretBudget, RegressionOracle};
use crate::scalar::Scalar;

/// Grid size used to validate links on `[-1, 1]`.
pub const LINK_GRID: usize = 10_000;

const NORM_SLACK: f64 = 1e-9;

/// Link function `σ : [-1, 1] → [0, 1]`, non-decreasing and 1-Lipschitz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// `clip(z, 0, 1)`.
    ClippedIdentity,
    /// `(1 + z) / 2`, derivative `1/2` everywhere.
    HalfAffine,
    /// `1 / (1 + exp(-slope · z))`, needs `0 < slope ≤ 4`.
    Logistic { slope: f64 },
    /// Piecewise-linear interpolation through `(z, σ(z))` knots sorted by `z`,
    /// constant beyond the end knots.
    Table { knots: Vec<(f64, f64)> },
}

impl Link {
    pub fn eval<T: Scalar>(&self, z: T) -> T {
        match self {
            Link::ClippedIdentity => z.clamp01(),
            Link::HalfAffine => ((T::one() + z) * T::lit(0.5)).clamp01(),
            Link::Logistic { slope } => T::one() / (T::one() + (-T::lit(*slope) * z).exp()),
            Link::Table { knots } => T::lit(table_eval(knots, z.to_f64_lossy())),
        }
    }

    /// Lower bound `c_σ` on `σ'` over `[-1, 1]`; zero when the link is flat somewhere.
    pub fn derivative_floor(&self) -> f64 {
        match self {
            Link::ClippedIdentity => 0.0,
            Link::HalfAffine => 0.5,
            Link::Logistic { slope } => {
                let s = 1.0 / (1.0 + (-slope).exp());
                slope * s * (1.0 - s)
            }
            Link::Table { .. } => {
                let h = 2.0 / LINK_GRID as f64;
                (0..LINK_GRID)
                    .map(|i| {
                        let z = -1.0 + i as f64 * h;
                        (self.eval(z + h) - self.eval(z)) / h
                    })
                    .fold(f64::INFINITY, f64::min)
                    .max(0.0)
            }
        }
    }

    /// Checks range, monotonicity and the Lipschitz bound on a grid of `[-1, 1]`.
    pub fn validate(&self) -> Result<()> {
        match self {
            Link::Logistic { slope } if !(*slope > 0.0 && *slope <= 4.0) => {
                return Err(Error::config(format!("logistic slope {slope} must lie in (0, 4]")));
            }
            Link::Table { knots } => {
                if knots.len() < 2 {
                    return Err(Error::config("link table needs at least two knots"));
                }
                if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::config("link table knots must be strictly increasing in z"));
                }
            }
            _ => {}
        }
        let h = 2.0 / LINK_GRID as f64;
        let mut prev: f64 = self.eval(-1.0);
        for i in 0..=LINK_GRID {
            let z = -1.0 + i as f64 * h;
            let v: f64 = self.eval(z);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(format!("link value {v} at z = {z} outside [0, 1]")));
            }
            if i > 0 {
                if v < prev - 1e-12 {
                    return Err(Error::validation(format!("link decreases near z = {z}")));
                }
                if v - prev > h + 1e-12 {
                    return Err(Error::validation(format!("link is not 1-Lipschitz near z = {z}")));
                }
            }
            prev = v;
        }
        Ok(())
    }
}

fn table_eval(knots: &[(f64, f64)], z: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if z <= first.0 {
        return first.1;
    }
    if z >= last.0 {
        return last.1;
    }
    let i = knots.partition_point(|k| k.0 <= z);
    let (z0, v0) = knots[i - 1];
    let (z1, v1) = knots[i];
    v0 + (v1 - v0) * (z - z0) / (z1 - z0)
}

fn check_feature_norm<T: Scalar>(x: &[T]) -> Result<()> {
    let n = norm2(x);
    if !(n <= T::one() + T::lit(NORM_SLACK)) {
        return Err(Error::validation(format!("feature norm {n} exceeds 1")));
    }
    Ok(())
}

/// GLMtron: projected gradient steps on the pseudo-gradient `2(σ(⟨θ, x⟩) - y) x`.
#[derive(Debug, Clone)]
pub struct GlmtronOracle<T> {
    theta: Vec<T>,
    link: Link,
    eta: T,
}

impl<T: Scalar> GlmtronOracle<T> {
    /// Step `η = 1/√T`.
    pub fn new(dim: usize, link: Link, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::config("GLMtron horizon must be positive"));
        }
        Self::with_step(dim, link, T::one() / T::from_count(horizon).sqrt())
    }

    pub fn with_step(dim: usize, link: Link, eta: T) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("GLMtron dimension must be at least 1"));
        }
        if !(eta > T::zero()) {
            return Err(Error::config("GLMtron step must be positive"));
        }
        link.validate()?;
        Ok(Self {
            theta: vec![T::zero(); dim],
            link,
            eta,
        })
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn step(&self) -> T {
        self.eta
    }

    pub fn link(&self) -> &Link {
        &self.link
    }

    /// One step on `(x, y)`.
    pub fn glmtron_step(&mut self, x: &[T], y: T) -> Result<()> {
        check_dim(x, self.theta.len())?;
        check_feature_norm(x)?;
        check_unit_outcome(y)?;
        let residual = self.link.eval(dot(&self.theta, x)) - y;
        let scale = self.eta * T::lit(2.0) * residual;
        for (t, &xi) in self.theta.iter_mut().zip(x) {
            *t = *t - scale * xi;
        }
        project_unit_ball(&mut self.theta);
        Ok(())
    }
}

impl<T: Scalar> RegressionOracle<T> for GlmtronOracle<T> {
    fn predict_raw(&self, context: &Context<T>, action: &Action<T>) -> Result<T> {
        let x = feature_vector(context, action)?;
        check_dim(x, self.theta.len())?;
        Ok(self.link.eval(dot(&self.theta, x)))
    }

    fn update(&mut self, example: &OracleExample<'_, T>) -> Result<()> {
        let x = feature_vector(example.context, example.action)?;
        self.glmtron_step(x, example.outcome)
    }

    fn budget(&self, horizon: usize) -> OracleRegretBudget<T> {
        OracleRegretBudget::glmtron(horizon)
    }

    fn guarantee(&self) -> Guarantee {
        Guarantee::RealizableOnly
    }

    fn name(&self) -> &'static str {
        "glmtron"
    }
}

/// `argmin_{‖v‖₂ ≤ 1} (v - θ̃)ᵀ Σ (v - θ̃)` for positive definite `Σ`.
///
/// Inside the ball `θ̃` is returned as is. Otherwise the minimizer is
/// `v(λ) = (Σ + λI)⁻¹ Σ θ̃` with `‖v(λ)‖ = 1`; `‖v(λ)‖` is decreasing in
/// `λ`, so `λ` is found by bisection in the eigenbasis of `Σ`.
pub fn sigma_norm_projection<T: Scalar>(theta_tilde: &[T], sigma: &SquareMatrix<T>) -> Result<Vec<T>> {
    check_dim(theta_tilde, sigma.dim())?;
    if norm2(theta_tilde) <= T::one() {
        return Ok(theta_tilde.to_vec());
    }
    let (vals, vecs) = sigma.symmetric_eigen();
    if vals.iter().any(|&l| !(l > T::zero())) {
        return Err(Error::numeric("Σ is not positive definite"));
    }
    let coords: Vec<T> = vecs.iter().map(|q| dot(q, theta_tilde)).collect();
    let norm_sq_at = |lam: T| -> T {
        vals.iter()
            .zip(&coords)
            .map(|(&l, &c)| {
                let v = l * c / (l + lam);
                v * v
            })
            .sum()
    };
    let lmax = vals.iter().copied().fold(T::zero(), T::max);
    let mut lo = T::zero();
    let mut hi = lmax * norm2(&coords);
    let tol = T::lit(1e-10);
    for _ in 0..400 {
        if hi - lo <= tol * hi.max(T::one()) {
            break;
        }
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if norm_sq_at(mid) > T::one() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d = sigma.dim();
    let mut out = vec![T::zero(); d];
    for ((&l, &c), q) in vals.iter().zip(&coords).zip(&vecs) {
        let w = l * c / (l + hi);
        for i in 0..d {
            out[i] = out[i] + w * q[i];
        }
    }
    project_unit_ball(&mut out);
    Ok(out)
}

/// Online-Newton GLMtron with `Σ₀ = εI`.
#[derive(Debug, Clone)]
pub struct NewtonGlmOracle<T> {
    theta: Vec<T>,
    sigma: SquareMatrix<T>,
    link: Link,
    eta: T,
    c_sigma: T,
}

impl<T: Scalar> NewtonGlmOracle<T> {
    /// Defaults `η = 1/(2 c_σ)`, `ε = 1`.
    pub fn new(dim: usize, link: Link, c_sigma: T) -> Result<Self> {
        if !(c_sigma > T::zero()) {
            return Err(Error::config("Newton GLMtron needs a derivative floor c_σ > 0"));
        }
        Self::with_params(dim, link, c_sigma, T::one() / (T::lit(2.0) * c_sigma), T::one())
    }

    pub fn with_params(dim: usize, link: Link, c_sigma: T, eta: T, epsilon: T) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("Newton GLMtron dimension must be at least 1"));
        }
        if !(c_sigma > T::zero()) {
            return Err(Error::config("Newton GLMtron needs a derivative floor c_σ > 0"));
        }
        if !(eta > T::zero()) || !(epsilon > T::zero()) {
            return Err(Error::config("Newton GLMtron step and ε must be positive"));
        }
        link.validate()?;
        Ok(Self {
            theta: vec![T::zero(); dim],
            sigma: SquareMatrix::scaled_identity(dim, epsilon),
            link,
            eta,
            c_sigma,
        })
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn sigma_matrix(&self) -> &SquareMatrix<T> {
        &self.sigma
    }

    pub fn c_sigma(&self) -> T {
        self.c_sigma
    }

    /// One step on `(x, y)`.
    pub fn newton_glm_step(&mut self, x: &[T], y: T) -> Result<()> {
        check_dim(x, self.theta.len())?;
        check_feature_norm(x)?;
        check_unit_outcome(y)?;
        let residual = self.link.eval(dot(&self.theta, x)) - y;
        self.sigma.add_outer(x, T::one());
        if residual == T::zero() {
            return Ok(());
        }
        let g: Vec<T> = x.iter().map(|&xi| T::lit(2.0) * residual * xi).collect();
        let dir = self.sigma.cholesky_solve(&g)?;
        let tilde: Vec<T> = self.theta.iter().zip(&dir).map(|(&t, &d)| t - self.eta * d).collect();
        self.theta = sigma_norm_projection(&tilde, &self.sigma)?;
        Ok(())
    }
}

impl<T: Scalar> RegressionOracle<T> for NewtonGlmOracle<T> {
    fn predict_raw(&self, context: &Context<T>, action: &Action<T>) -> Result<T> {
        let x = feature_vector(context, action)?;
        check_dim(x, self.theta.len())?;
        Ok(self.link.eval(dot(&self.theta, x)))
    }

    fn update(&mut self, example: &OracleExample<'_, T>) -> Result<()> {
        let x = feature_vector(example.context, example.action)?;
        self.newton_glm_step(x, example.outcome)
    }

    fn budget(&self, horizon: usize) -> OracleRegretBudget<T> {
        OracleRegretBudget::newton_glm(self.theta.len(), horizon, self.c_sigma)
    }

    fn guarantee(&self) -> Guarantee {
        Guarantee::RealizableOnly
    }

    fn name(&self) -> &'static str {
        "newton_glm"
    }
}
