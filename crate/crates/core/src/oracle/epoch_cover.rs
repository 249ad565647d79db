//! Epoch-based cover oracle for an explicitly enumerated base class `G`.
//!
//! Rounds are split into epochs starting at `τ_m = ⌈e^{m-1}⌉`. At each epoch
//! start the base class is covered at scale `ε` under the empirical L2
//! distance on every context seen so far, and a fresh aggregating oracle is
//! run over the tensorized cover `{(x, a) ↦ g_a(x)}`.

use std::sync::Arc;

use super::{check_unit_outcome, Action, AggregatingOracle, BaseClass, Context, Guarantee};
use super::{OracleExample, OracleRegretBudget, RegressionOracle, TensorClass};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default cap on the inner tensor class size.
pub const DEFAULT_MAX_TENSOR: usize = 1 << 20;

/// Epoch start rounds `⌈e^{m-1}⌉` up to `horizon`, with duplicates skipped.
pub fn epoch_boundaries(horizon: usize) -> Vec<usize> {
    let mut out = vec![1usize];
    let mut m = 1i32;
    loop {
        let tau = (m as f64).exp().ceil() as usize;
        m += 1;
        if tau <= *out.last().unwrap() {
            continue;
        }
        if tau > horizon {
            break;
        }
        out.push(tau);
    }
    out
}

fn next_boundary_after(round: usize) -> usize {
    let mut m = 0i32;
    loop {
        let tau = (m as f64).exp().ceil() as usize;
        if tau > round {
            return tau;
        }
        m += 1;
    }
}

/// Root-mean-square distance between `a` and `b` weighted by context counts.
///
/// An empty sample gives distance zero.
pub fn empirical_distance<T: Scalar>(a: &[T], b: &[T], counts: &[usize]) -> T {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return T::zero();
    }
    let mut acc = T::zero();
    for ((&x, &y), &c) in a.iter().zip(b).zip(counts) {
        if c > 0 {
            acc = acc + T::from_count(c) * (x - y) * (x - y);
        }
    }
    (acc / T::from_count(total)).sqrt()
}

/// Greedy farthest-point `ε`-cover of `base` under [`empirical_distance`].
///
/// Starts from member 0 and repeatedly adds the member farthest from the
/// current cover until every member is within `epsilon`.
pub fn greedy_cover<T: Scalar>(base: &BaseClass<T>, counts: &[usize], epsilon: T) -> Result<Vec<usize>> {
    if base.is_empty() {
        return Err(Error::config("cannot cover an empty base class"));
    }
    if !(epsilon >= T::zero()) {
        return Err(Error::config("cover scale must be >= 0"));
    }
    let mut cover = vec![0usize];
    let mut dist: Vec<T> = base
        .values
        .iter()
        .map(|g| empirical_distance(g, &base.values[0], counts))
        .collect();
    loop {
        let (far, &d) = dist
            .iter()
            .enumerate()
            .fold((0, &T::neg_infinity()), |acc, (i, d)| if *d > *acc.1 { (i, d) } else { acc });
        if d <= epsilon {
            return Ok(cover);
        }
        cover.push(far);
        for (i, g) in base.values.iter().enumerate() {
            dist[i] = dist[i].min(empirical_distance(g, &base.values[far], counts));
        }
    }
}

#[derive(Debug, Clone)]
pub struct EpochCoverOracle<T> {
    base: Arc<BaseClass<T>>,
    arms: usize,
    epsilon: T,
    max_tensor: usize,
    counts: Vec<usize>,
    round: usize,
    epoch: usize,
    next_boundary: usize,
    inner: AggregatingOracle<T, TensorClass<T>>,
}

impl<T: Scalar> EpochCoverOracle<T> {
    pub fn new(base: BaseClass<T>, arms: usize, epsilon: T) -> Result<Self> {
        Self::with_limit(base, arms, epsilon, DEFAULT_MAX_TENSOR)
    }

    pub fn with_limit(base: BaseClass<T>, arms: usize, epsilon: T, max_tensor: usize) -> Result<Self> {
        if base.is_empty() {
            return Err(Error::config("epoch cover oracle needs a non-empty base class"));
        }
        if !(epsilon > T::zero()) {
            return Err(Error::config("cover scale must be > 0"));
        }
        let base = Arc::new(base);
        let counts = vec![0; base.contexts];
        let members = greedy_cover(&base, &counts, epsilon)?;
        let inner = AggregatingOracle::new(TensorClass::new(base.clone(), members, arms, max_tensor)?)?;
        Ok(Self {
            base,
            arms,
            epsilon,
            max_tensor,
            counts,
            round: 1,
            epoch: 1,
            next_boundary: next_boundary_after(1),
            inner,
        })
    }

    /// Current round, 1-based.
    pub fn round(&self) -> usize {
        self.round
    }

    /// Current epoch index `m`.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// Base-class indices of the current cover.
    pub fn cover(&self) -> &[usize] {
        self.inner.class().members()
    }

    /// Context counts of the sample `S_m`.
    pub fn sample_counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn inner(&self) -> &AggregatingOracle<T, TensorClass<T>> {
        &self.inner
    }

    /// Rebuilds the cover on the current sample and restarts the inner oracle.
    ///
    /// Only valid at an epoch start; `update` calls this automatically.
    pub fn epoch_rebuild(&mut self) -> Result<()> {
        if self.round != self.next_boundary {
            return Err(Error::validation(format!(
                "round {} is not an epoch boundary (next is {})",
                self.round, self.next_boundary
            )));
        }
        let members = greedy_cover(&self.base, &self.counts, self.epsilon)?;
        let class = TensorClass::new(self.base.clone(), members, self.arms, self.max_tensor)?;
        self.inner = AggregatingOracle::new(class)?;
        self.epoch += 1;
        self.next_boundary = next_boundary_after(self.round);
        Ok(())
    }
}

impl<T: Scalar> RegressionOracle<T> for EpochCoverOracle<T> {
    fn predict_raw(&self, context: &Context<T>, action: &Action<T>) -> Result<T> {
        self.inner.predict_raw(context, action)
    }

    fn update(&mut self, example: &OracleExample<'_, T>) -> Result<()> {
        check_unit_outcome(example.outcome)?;
        let id = example.context.id;
        if id >= self.counts.len() {
            return Err(Error::config(format!("context {id} outside the base class domain")));
        }
        self.inner.update(example)?;
        self.counts[id] += 1;
        self.round += 1;
        if self.round == self.next_boundary {
            self.epoch_rebuild()?;
        }
        Ok(())
    }

    /// `2 K ln|G|` per epoch plus `ε² T` for the cover approximation.
    fn budget(&self, horizon: usize) -> OracleRegretBudget<T> {
        let epochs = epoch_boundaries(horizon.max(1)).len();
        let per_epoch = T::lit(2.0) * T::from_count(self.arms) * T::from_count(self.base.len()).ln();
        let bound = T::from_count(epochs) * per_epoch + self.epsilon * self.epsilon * T::from_count(horizon);
        OracleRegretBudget::user(bound).expect("budget is finite and nonnegative")
    }

    fn guarantee(&self) -> Guarantee {
        Guarantee::AdversarialRegret
    }

    fn name(&self) -> &'static str {
        "epoch_cover"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constants(n: usize) -> BaseClass<f64> {
        BaseClass::new(1, (0..n).map(|k| vec![k as f64 / (n - 1) as f64]).collect()).unwrap()
    }

    #[test]
    fn boundaries_strictly_increase_from_one() {
        assert_eq!(epoch_boundaries(100), vec![1, 3, 8, 21, 55]);
        assert_eq!(epoch_boundaries(1), vec![1]);
    }

    #[test]
    fn large_scale_gives_single_center() {
        let g = constants(21);
        assert_eq!(greedy_cover(&g, &[5], 1.0).unwrap().len(), 1);
    }

    #[test]
    fn zero_scale_keeps_distinct_members() {
        let g = constants(7);
        assert_eq!(greedy_cover(&g, &[1], 0.0).unwrap().len(), 7);
    }

    #[test]
    fn empty_sample_collapses_cover() {
        let g = constants(7);
        assert_eq!(greedy_cover(&g, &[0], 0.01).unwrap(), vec![0]);
    }

    #[test]
    fn rebuilds_on_schedule() {
        let base = BaseClass::new(2, vec![vec![0.1, 0.9], vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap();
        let mut o = EpochCoverOracle::new(base, 2, 0.05).unwrap();
        assert_eq!(o.cover().len(), 1);
        assert!(o.epoch_rebuild().is_err());
        for t in 0..30 {
            let ctx = Context::tabular(t % 2);
            o.update(&OracleExample::new(&ctx, &Action::Arm(0), 0.1)).unwrap();
        }
        assert_eq!(o.epoch(), 4);
        assert_eq!(o.cover().len(), 3);
        assert_eq!(o.sample_counts(), &[15, 15]);
        let p = o.predict(&Context::tabular(0), &Action::Arm(0)).unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
}
