//! Objective oracles and the counting evaluator every algorithm talks through.

use std::marker::PhantomData;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::counters::EvalCounters;
use crate::error::{GoseError, Result};
use crate::linalg::{axpy, norm, scale};
use crate::scalar::Scalar;

/// Which access patterns an oracle supports.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub deterministic: bool,
    pub finite_sum: bool,
    pub stochastic: bool,
    /// Hessian-vector products (full, component or sample) are available in closed form.
    pub analytic_hvp: bool,
}

/// Identifies one draw `xi` of a stochastic oracle.
///
/// Oracles must derive the sample from the key alone, so evaluating the same key
/// at two points uses the same `xi`. Variance-reduced updates rely on this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleKey(pub u64);

impl SampleKey {
    /// Deterministic generator for the randomness of this sample.
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// A smooth objective `f: R^d -> R`, optionally a finite sum `(1/n) sum_i f_i` or an
/// expectation `E[F(x; xi)]`.
///
/// Methods outside the advertised [`Capabilities`] panic; callers check the flags first.
pub trait Objective<T: Scalar> {
    fn dim(&self) -> usize;

    fn value(&self, x: &[T]) -> T;

    /// Full (expected) gradient.
    fn gradient(&self, x: &[T]) -> Vec<T>;

    fn capabilities(&self) -> Capabilities;

    fn hvp(&self, _x: &[T], _v: &[T]) -> Vec<T> {
        panic!("oracle has no analytic Hessian-vector product")
    }

    /// Number of components in finite-sum mode, 0 otherwise.
    fn n_components(&self) -> usize {
        0
    }

    fn component_gradient(&self, _i: usize, _x: &[T]) -> Vec<T> {
        panic!("oracle is not a finite sum")
    }

    fn component_hvp(&self, _i: usize, _x: &[T], _v: &[T]) -> Vec<T> {
        panic!("oracle has no analytic component Hessian-vector product")
    }

    /// One draw of `grad F(x; xi)` with `xi` determined by `key`.
    fn sample_gradient(&self, _x: &[T], _key: SampleKey) -> Vec<T> {
        panic!("oracle is not stochastic")
    }

    /// One draw of `hess F(x; xi) v` with `xi` determined by `key`.
    fn sample_hvp(&self, _x: &[T], _v: &[T], _key: SampleKey) -> Vec<T> {
        panic!("oracle has no analytic sample Hessian-vector product")
    }
}

macro_rules! forward_objective {
    ($($ty:ty),*) => {$(
        impl<T: Scalar, O: Objective<T> + ?Sized> Objective<T> for $ty {
            fn dim(&self) -> usize {
                (**self).dim()
            }
            fn value(&self, x: &[T]) -> T {
                (**self).value(x)
            }
            fn gradient(&self, x: &[T]) -> Vec<T> {
                (**self).gradient(x)
            }
            fn capabilities(&self) -> Capabilities {
                (**self).capabilities()
            }
            fn hvp(&self, x: &[T], v: &[T]) -> Vec<T> {
                (**self).hvp(x, v)
            }
            fn n_components(&self) -> usize {
                (**self).n_components()
            }
            fn component_gradient(&self, i: usize, x: &[T]) -> Vec<T> {
                (**self).component_gradient(i, x)
            }
            fn component_hvp(&self, i: usize, x: &[T], v: &[T]) -> Vec<T> {
                (**self).component_hvp(i, x, v)
            }
            fn sample_gradient(&self, x: &[T], key: SampleKey) -> Vec<T> {
                (**self).sample_gradient(x, key)
            }
            fn sample_hvp(&self, x: &[T], v: &[T], key: SampleKey) -> Vec<T> {
                (**self).sample_hvp(x, v, key)
            }
        }
    )*};
}

forward_objective!(&O, Box<O>);

/// Where Hessian-vector products come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HvpSource {
    /// Analytic when the oracle advertises it, finite differences of gradients otherwise.
    #[default]
    Auto,
    /// Always synthesize from gradient differences (gradient-only instantiation).
    FiniteDifference,
}

/// Central-difference radius `sqrt(eps_machine) * (1 + |x|)`.
pub fn fd_radius<T: Scalar>(x: &[T]) -> T {
    T::epsilon().sqrt() * (T::one() + norm(x))
}

/// `(g(x + r u) - g(x - r u)) / (2 r) * |v|` with `u = v / |v|`.
///
/// Makes exactly two calls to `grad`.
pub fn fd_hvp_with<T, G>(mut grad: G, x: &[T], v: &[T]) -> Result<Vec<T>>
where
    T: Scalar,
    G: FnMut(&[T]) -> Vec<T>,
{
    let vn = norm(v);
    if vn <= T::zero() || !vn.is_finite() {
        return Err(GoseError::ZeroDirection);
    }
    let r = fd_radius(x);
    let step = r / vn;
    let mut plus = x.to_vec();
    axpy(step, v, &mut plus);
    let mut minus = x.to_vec();
    axpy(-step, v, &mut minus);
    let gp = grad(&plus);
    let gm = grad(&minus);
    let mut out: Vec<T> = gp.iter().zip(&gm).map(|(&a, &b)| a - b).collect();
    scale(vn / (r + r), &mut out);
    Ok(out)
}

/// Wraps an oracle, charging every call to an [`EvalCounters`].
pub struct Evaluator<'a, T: Scalar, O: Objective<T> + ?Sized> {
    oracle: &'a O,
    counters: EvalCounters,
    hvp_source: HvpSource,
    _scalar: PhantomData<T>,
}

impl<'a, T: Scalar, O: Objective<T> + ?Sized> Evaluator<'a, T, O> {
    pub fn new(oracle: &'a O) -> Self {
        Self::with_hvp_source(oracle, HvpSource::Auto)
    }

    pub fn with_hvp_source(oracle: &'a O, hvp_source: HvpSource) -> Self {
        Self {
            oracle,
            counters: EvalCounters::default(),
            hvp_source,
            _scalar: PhantomData,
        }
    }

    pub fn oracle(&self) -> &'a O {
        self.oracle
    }

    pub fn dim(&self) -> usize {
        self.oracle.dim()
    }

    pub fn capabilities(&self) -> Capabilities {
        self.oracle.capabilities()
    }

    pub fn counters(&self) -> &EvalCounters {
        &self.counters
    }

    pub fn counters_mut(&mut self) -> &mut EvalCounters {
        &mut self.counters
    }

    fn analytic_hvp(&self) -> bool {
        self.hvp_source == HvpSource::Auto && self.oracle.capabilities().analytic_hvp
    }

    /// Cost in oracle units of one Hessian-vector product of any kind.
    pub fn hvp_unit_cost(&self) -> u64 {
        if self.analytic_hvp() {
            1
        } else {
            2
        }
    }

    /// 1 function evaluation.
    pub fn value(&mut self, x: &[T]) -> T {
        self.counters.fn_evals += 1;
        self.oracle.value(x)
    }

    /// 1 gradient evaluation.
    pub fn gradient(&mut self, x: &[T]) -> Vec<T> {
        self.counters.grad_evals += 1;
        self.oracle.gradient(x)
    }

    /// Full gradient of a finite sum, charged as `n` component gradients.
    pub fn full_gradient(&mut self, x: &[T]) -> Vec<T> {
        self.counters.component_grad_evals += self.oracle.n_components() as u64;
        self.oracle.gradient(x)
    }

    /// 1 HVP when analytic, otherwise 2 gradient evaluations. A zero `v` is free.
    pub fn hvp(&mut self, x: &[T], v: &[T]) -> Vec<T> {
        if self.analytic_hvp() {
            self.counters.hvp_evals += 1;
            return self.oracle.hvp(x, v);
        }
        match finite_diff_hvp(self, x, v) {
            Ok(hv) => hv,
            Err(_) => vec![T::zero(); v.len()],
        }
    }

    /// 1 component gradient.
    pub fn component_gradient(&mut self, i: usize, x: &[T]) -> Vec<T> {
        self.counters.component_grad_evals += 1;
        self.oracle.component_gradient(i, x)
    }

    /// 1 HVP when analytic, otherwise 2 component gradients.
    pub fn component_hvp(&mut self, i: usize, x: &[T], v: &[T]) -> Vec<T> {
        if self.analytic_hvp() {
            self.counters.hvp_evals += 1;
            return self.oracle.component_hvp(i, x, v);
        }
        let oracle = self.oracle;
        let counters = &mut self.counters;
        fd_hvp_with(
            |p| {
                counters.component_grad_evals += 1;
                oracle.component_gradient(i, p)
            },
            x,
            v,
        )
        .unwrap_or_else(|_| vec![T::zero(); v.len()])
    }

    /// 1 stochastic gradient.
    pub fn sample_gradient(&mut self, x: &[T], key: SampleKey) -> Vec<T> {
        self.counters.stoch_grad_evals += 1;
        self.oracle.sample_gradient(x, key)
    }

    /// 1 HVP when analytic, otherwise 2 stochastic gradients sharing `key`.
    pub fn sample_hvp(&mut self, x: &[T], v: &[T], key: SampleKey) -> Vec<T> {
        if self.analytic_hvp() {
            self.counters.hvp_evals += 1;
            return self.oracle.sample_hvp(x, v, key);
        }
        let oracle = self.oracle;
        let counters = &mut self.counters;
        fd_hvp_with(
            |p| {
                counters.stoch_grad_evals += 1;
                oracle.sample_gradient(p, key)
            },
            x,
            v,
        )
        .unwrap_or_else(|_| vec![T::zero(); v.len()])
    }

    /// Mean of `keys.len()` stochastic gradients.
    pub fn mean_sample_gradient(&mut self, x: &[T], keys: &[SampleKey]) -> Vec<T> {
        let mut acc = vec![T::zero(); x.len()];
        for &k in keys {
            let g = self.sample_gradient(x, k);
            crate::linalg::accumulate(&mut acc, &g);
        }
        if !keys.is_empty() {
            scale(T::one() / T::from_count(keys.len()), &mut acc);
        }
        acc
    }

    /// Mean of component gradients over `indices`.
    pub fn mean_component_gradient(&mut self, x: &[T], indices: &[usize]) -> Vec<T> {
        let mut acc = vec![T::zero(); x.len()];
        for &i in indices {
            let g = self.component_gradient(i, x);
            crate::linalg::accumulate(&mut acc, &g);
        }
        if !indices.is_empty() {
            scale(T::one() / T::from_count(indices.len()), &mut acc);
        }
        acc
    }
}

/// Hessian-vector product synthesized from two gradient calls.
///
/// Uses radius `r = sqrt(eps_machine) * (1 + |x|)` along `u = v/|v|` and rescales by
/// `|v|`. Charges exactly 2 gradient evaluations.
pub fn finite_diff_hvp<T: Scalar, O: Objective<T> + ?Sized>(
    eval: &mut Evaluator<'_, T, O>,
    x: &[T],
    v: &[T],
) -> Result<Vec<T>> {
    let oracle = eval.oracle;
    let counters = &mut eval.counters;
    fd_hvp_with(
        |p| {
            counters.grad_evals += 1;
            oracle.gradient(p)
        },
        x,
        v,
    )
}
