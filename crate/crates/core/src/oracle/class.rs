use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{feature_vector, Action, Context};
use crate::error::{Error, Result};
use crate::glm::Link;
use crate::linalg::dot;
use crate::scalar::Scalar;

/// An enumerated finite class of regressors `(x, a) ↦ [0, 1]`.
pub trait HypothesisClass<T: Scalar>: Send + Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes `f(x, a)` for every member `f` into `out` (cleared first).
    fn values_at(&self, context: &Context<T>, action: &Action<T>, out: &mut Vec<T>) -> Result<()>;
}

impl<T: Scalar, C: HypothesisClass<T>> HypothesisClass<T> for Arc<C> {
    fn len(&self) -> usize {
        (**self).len()
    }

    fn values_at(&self, context: &Context<T>, action: &Action<T>, out: &mut Vec<T>) -> Result<()> {
        (**self).values_at(context, action, out)
    }
}

fn arm_of<T>(action: &Action<T>) -> Result<usize> {
    match action {
        Action::Arm(a) => Ok(*a),
        Action::Ball(_) => Err(Error::config("tabular classes need arm actions")),
    }
}

/// Finite class stored as value tables over enumerated contexts.
///
/// `tables[f][x * arms + a] = f(x, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteClass<T> {
    pub contexts: usize,
    pub arms: usize,
    pub tables: Vec<Vec<T>>,
}

impl<T: Scalar> FiniteClass<T> {
    pub fn new(contexts: usize, arms: usize, tables: Vec<Vec<T>>) -> Result<Self> {
        if tables.is_empty() {
            return Err(Error::config("finite class must have at least one member"));
        }
        for (i, t) in tables.iter().enumerate() {
            if t.len() != contexts * arms {
                return Err(Error::config(format!(
                    "member {i} has {} values, expected {}",
                    t.len(),
                    contexts * arms
                )));
            }
            if let Some(v) = t.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
                return Err(Error::validation(format!("member {i} has value {v} outside [0, 1]")));
            }
        }
        Ok(Self {
            contexts,
            arms,
            tables,
        })
    }

    #[inline]
    pub fn value(&self, member: usize, context: usize, arm: usize) -> T {
        self.tables[member][context * self.arms + arm]
    }

    /// The per-arm columns `x ↦ f(x, a)` of every member, as a base class.
    pub fn base_columns(&self) -> BaseClass<T> {
        let mut values = Vec::with_capacity(self.tables.len() * self.arms);
        for t in &self.tables {
            for a in 0..self.arms {
                values.push((0..self.contexts).map(|x| t[x * self.arms + a]).collect());
            }
        }
        BaseClass {
            contexts: self.contexts,
            values,
        }
    }
}

impl<T: Scalar> HypothesisClass<T> for FiniteClass<T> {
    fn len(&self) -> usize {
        self.tables.len()
    }

    fn values_at(&self, context: &Context<T>, action: &Action<T>, out: &mut Vec<T>) -> Result<()> {
        let a = arm_of(action)?;
        if context.id >= self.contexts || a >= self.arms {
            return Err(Error::config(format!(
                "(context {}, arm {a}) outside the class domain {}x{}",
                context.id, self.contexts, self.arms
            )));
        }
        let idx = context.id * self.arms + a;
        out.clear();
        out.extend(self.tables.iter().map(|t| t[idx]));
        Ok(())
    }
}

/// Base class `G` of maps `context ↦ [0, 1]`; `values[g][x] = g(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseClass<T> {
    pub contexts: usize,
    pub values: Vec<Vec<T>>,
}

impl<T: Scalar> BaseClass<T> {
    pub fn new(contexts: usize, values: Vec<Vec<T>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::config("base class must have at least one member"));
        }
        for (i, g) in values.iter().enumerate() {
            if g.len() != contexts {
                return Err(Error::config(format!("base member {i} has {} values, expected {contexts}", g.len())));
            }
            if g.iter().any(|v| !(*v >= T::zero() && *v <= T::one())) {
                return Err(Error::validation(format!("base member {i} leaves [0, 1]")));
            }
        }
        Ok(Self { contexts, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Tensor class `{(x, a) ↦ g_a(x) : g ∈ members^K}` over a subset of a base class.
///
/// Member `i` is decoded in mixed radix: arm `a` uses `members[(i / m^a) % m]`.
#[derive(Debug, Clone)]
pub struct TensorClass<T> {
    base: Arc<BaseClass<T>>,
    members: Vec<usize>,
    arms: usize,
    size: usize,
}

impl<T: Scalar> TensorClass<T> {
    pub fn new(base: Arc<BaseClass<T>>, members: Vec<usize>, arms: usize, max_size: usize) -> Result<Self> {
        if members.is_empty() || arms == 0 {
            return Err(Error::config("tensor class needs members and arms"));
        }
        let mut size = 1usize;
        for _ in 0..arms {
            size = size
                .checked_mul(members.len())
                .filter(|s| *s <= max_size)
                .ok_or_else(|| {
                    Error::Resource(format!(
                        "tensor class {}^{arms} exceeds the limit {max_size}",
                        members.len()
                    ))
                })?;
        }
        Ok(Self {
            base,
            members,
            arms,
            size,
        })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Base-class index used by hypothesis `index` on `arm`.
    pub fn component(&self, index: usize, arm: usize) -> usize {
        let m = self.members.len();
        self.members[(index / m.pow(arm as u32)) % m]
    }
}

impl<T: Scalar> HypothesisClass<T> for TensorClass<T> {
    fn len(&self) -> usize {
        self.size
    }

    fn values_at(&self, context: &Context<T>, action: &Action<T>, out: &mut Vec<T>) -> Result<()> {
        let a = arm_of(action)?;
        if context.id >= self.base.contexts || a >= self.arms {
            return Err(Error::config(format!(
                "(context {}, arm {a}) outside the tensor class domain",
                context.id
            )));
        }
        let m = self.members.len();
        let stride = m.pow(a as u32);
        let column: Vec<T> = self.members.iter().map(|&g| self.base.values[g][context.id]).collect();
        out.clear();
        out.extend((0..self.size).map(|i| column[(i / stride) % m]));
        Ok(())
    }
}

/// Finite class of (generalized) linear regressors `(x, a) ↦ σ(⟨θ, x_a⟩)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClass<T> {
    pub params: Vec<Vec<T>>,
    pub link: Link,
}

impl<T: Scalar> HypothesisClass<T> for LinearClass<T> {
    fn len(&self) -> usize {
        self.params.len()
    }

    fn values_at(&self, context: &Context<T>, action: &Action<T>, out: &mut Vec<T>) -> Result<()> {
        let x = feature_vector(context, action)?;
        out.clear();
        for theta in &self.params {
            super::check_dim(x, theta.len())?;
            out.push(self.link.eval(dot(theta, x)).clamp01());
        }
        Ok(())
    }
}
