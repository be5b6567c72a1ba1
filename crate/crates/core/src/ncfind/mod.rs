//! Negative-curvature finders.
//!
//! Every finder honours one contract: it returns a unit direction `v` with
//! `v' H v <= -eps_h/2` (re-measured before returning) or `Bottom`, which signals that
//! with probability at least `1 - delta` no eigenvalue of `H` lies below `-eps_h`.
//! Lanczos is the core engine; the deterministic, finite-sum and stochastic variants
//! differ in where the Hessian-vector products come from. A streaming Oja engine is
//! available for the stochastic setting.

mod lanczos;
pub mod tridiag;

pub use lanczos::{lanczos_min_eig, symmetry_probe, LanczosResult, NcBudget};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GoseError, Result};
use crate::linalg::{accumulate, axpy, dot, normalize, random_unit, scale};
use crate::oracle::{Evaluator, Objective, SampleKey};
use crate::scalar::Scalar;

/// Engine used by [`approx_nc_stochastic`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StochasticEngine {
    /// Streaming power iteration on `I - eta H` with one fresh sample per step.
    #[default]
    Oja,
    /// Lanczos on the average of a fixed minibatch of sample Hessians.
    MinibatchLanczos,
}

/// Tunables shared by all finders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NcConfig<T> {
    /// Multiplier on the iteration/sample budget formulas.
    pub budget_mult: T,
    pub restarts: usize,
    pub residual_tol: T,
    pub symmetry_tol: T,
    pub engine: StochasticEngine,
    /// Oja step size; `eps_h / (8 L^2)` when unset.
    pub oja_step: Option<T>,
    /// Constant of the stochastic validation batch `ceil(c r^2 ln(2/delta) / eps_h^2)`.
    pub validation_mult: T,
    /// Bound `r` on `|v' (hess F(x; xi) - hess f(x)) v|` for unit `v`; `L` when unset.
    pub validation_range: Option<T>,
}

impl<T: Scalar> Default for NcConfig<T> {
    fn default() -> Self {
        Self {
            budget_mult: T::lit(2.0),
            restarts: 2,
            residual_tol: lanczos::default_residual_tol(),
            symmetry_tol: lanczos::default_symmetry_tol(),
            engine: StochasticEngine::Oja,
            oja_step: None,
            validation_mult: T::lit(128.0),
            validation_range: None,
        }
    }
}

/// Problem-side quantities a finder needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcTarget<T> {
    pub eps_h: T,
    pub delta: T,
    /// Gradient-Lipschitz constant, an upper bound on `|H|`.
    pub l: T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NcVerdict<T> {
    /// No curvature below `-eps_h` (with probability `1 - delta`).
    Bottom,
    Direction {
        direction: Vec<T>,
        rayleigh: T,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NcOutcome<T> {
    pub verdict: NcVerdict<T>,
    /// Smallest Rayleigh quotient measured at exit over all restarts.
    pub measured_rayleigh: T,
    /// Oracle units spent (HVPs, or gradients when HVPs are synthesized).
    pub cost: u64,
}

impl<T: Scalar> NcOutcome<T> {
    pub fn is_bottom(&self) -> bool {
        matches!(self.verdict, NcVerdict::Bottom)
    }

    pub fn direction(&self) -> Option<&[T]> {
        match &self.verdict {
            NcVerdict::Direction { direction, .. } => Some(direction),
            NcVerdict::Bottom => None,
        }
    }
}

fn ceil_count<T: Scalar>(x: T) -> usize {
    let c = x.ceil().to_usize().unwrap_or(usize::MAX);
    c.max(1)
}

/// `ceil(budget_mult * ln(d/delta) * sqrt(L/eps_h))`, before capping at `d`.
pub fn deterministic_matvec_budget<T: Scalar>(d: usize, target: &NcTarget<T>, mult: T) -> usize {
    let logd = (T::from_count(d) / target.delta).ln();
    ceil_count(mult * logd * (target.l / target.eps_h).sqrt())
}

/// Oja sample budget `ceil(budget_mult * ln^2(d/delta) * L^2/eps_h^2)`.
pub fn oja_sample_budget<T: Scalar>(d: usize, target: &NcTarget<T>, mult: T) -> usize {
    let logd = (T::from_count(d) / target.delta).ln();
    let ratio = target.l / target.eps_h;
    ceil_count(mult * logd * logd * ratio * ratio)
}

/// Per-product minibatch of the minibatch-Lanczos engine, `ceil(budget_mult * L^2/eps_h^2 / sqrt(d))`.
pub fn stochastic_minibatch<T: Scalar>(d: usize, target: &NcTarget<T>, mult: T) -> usize {
    let ratio = target.l / target.eps_h;
    ceil_count(mult * ratio * ratio / T::from_count(d).sqrt())
}

/// Validation batch `ceil(validation_mult * r^2 ln(2/delta) / eps_h^2)`. With the default
/// multiplier this is Hoeffding's bound for Rayleigh samples within `r` of their mean at
/// accuracy `eps_h/8`.
pub fn validation_batch<T: Scalar>(target: &NcTarget<T>, range: T, mult: T) -> usize {
    let ratio = range / target.eps_h;
    ceil_count(mult * ratio * ratio * (T::lit(2.0) / target.delta).ln())
}

/// Finite-sum minibatch `min(n, ceil(budget_mult * n^{3/4} sqrt(L/eps_h) / max_matvecs))`.
pub fn finite_sum_minibatch<T: Scalar>(
    n: usize,
    target: &NcTarget<T>,
    mult: T,
    max_matvecs: usize,
) -> usize {
    let nf = T::from_count(n);
    let raw = mult * nf.powf(T::lit(0.75)) * (target.l / target.eps_h).sqrt()
        / T::from_count(max_matvecs.max(1));
    ceil_count(raw).min(n)
}

impl<T: Scalar> NcConfig<T> {
    fn budget(&self, max_matvecs: usize) -> NcBudget<T> {
        NcBudget {
            max_matvecs,
            restarts: self.restarts,
            residual_tol: self.residual_tol,
            symmetry_tol: self.symmetry_tol,
        }
    }

    fn check(&self) -> Result<()> {
        let positive = self.budget_mult > T::zero();
        if self.restarts == 0 || !positive {
            return Err(GoseError::BudgetZero);
        }
        Ok(())
    }
}

fn check_unit_direction<T: Scalar>(v: &[T]) {
    debug_assert!((crate::linalg::norm(v) - T::one()).abs() <= T::lit(1e3) * T::epsilon());
}

/// Runs Lanczos restarts on `op` and applies the acceptance rule `accept(v, lanczos_rayleigh)`,
/// which returns the validated Rayleigh quotient when the direction passes.
fn lanczos_restarts<T, Op, V, R>(
    mut op: Op,
    d: usize,
    budget: &NcBudget<T>,
    mut validate: V,
    rng: &mut R,
) -> Result<(NcVerdict<T>, T)>
where
    T: Scalar,
    Op: FnMut(&[T]) -> Vec<T>,
    V: FnMut(&[T], T) -> (bool, T),
    R: Rng + ?Sized,
{
    if budget.max_matvecs == 0 {
        return Err(GoseError::BudgetZero);
    }
    symmetry_probe(&mut op, d, budget.symmetry_tol, rng)?;
    let mut best = T::infinity();
    for _ in 0..budget.restarts {
        let res = lanczos::lanczos_unchecked(&mut op, d, budget, rng);
        let (ok, rayleigh) = validate(&res.vector, res.lambda);
        best = best.min(rayleigh);
        if ok {
            check_unit_direction(&res.vector);
            return Ok((
                NcVerdict::Direction {
                    direction: res.vector,
                    rayleigh,
                },
                best,
            ));
        }
    }
    Ok((NcVerdict::Bottom, best))
}

/// Deterministic finder: Lanczos on `H = hess f(x)` using the evaluator's HVPs.
///
/// With analytic HVPs each product costs one unit; with gradient-difference HVPs it
/// costs two gradients, which gives a gradient-only finder. The iteration cap is
/// `m = min(d, ceil(budget_mult ln(d/delta) sqrt(L/eps_h)))` and the total cost is at most
/// `u * (2 + restarts * (m + 1))` with `u` the unit cost of one HVP.
/// Accepts iff the recomputed `v' H v <= -eps_h/2`.
pub fn approx_nc_deterministic<T, O, R>(
    eval: &mut Evaluator<'_, T, O>,
    x: &[T],
    target: &NcTarget<T>,
    cfg: &NcConfig<T>,
    rng: &mut R,
) -> Result<NcOutcome<T>>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
    R: Rng + ?Sized,
{
    cfg.check()?;
    let d = eval.dim();
    let start = eval.counters().oracle_units();
    eval.counters_mut().nc_calls += 1;
    let m = deterministic_matvec_budget(d, target, cfg.budget_mult).min(d);
    let budget = cfg.budget(m);
    let threshold = -target.eps_h / T::lit(2.0);
    let (verdict, best) = lanczos_restarts(
        |v: &[T]| eval.hvp(x, v),
        d,
        &budget,
        |_, lam| (lam <= threshold, lam),
        rng,
    )?;
    let cost = eval.counters().oracle_units() - start;
    Ok(NcOutcome {
        verdict,
        measured_rayleigh: best,
        cost,
    })
}

fn draw_keys<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<SampleKey> {
    (0..n).map(|_| SampleKey(rng.random())).collect()
}

/// Mean of `v' hess F(x; xi) v` over a fresh batch of `n` samples.
fn sample_rayleigh<T, O, R>(
    eval: &mut Evaluator<'_, T, O>,
    x: &[T],
    v: &[T],
    n: usize,
    rng: &mut R,
) -> T
where
    T: Scalar,
    O: Objective<T> + ?Sized,
    R: Rng + ?Sized,
{
    let mut acc = T::zero();
    for key in draw_keys(n, rng) {
        let hv = eval.sample_hvp(x, v, key);
        acc = acc + dot(v, &hv);
    }
    acc / T::from_count(n)
}

/// Stochastic finder using only sampled Hessian-vector products (or sampled gradient
/// differences).
///
/// * Oja: `v <- normalize(v - eta * hess F(x; xi) v)` over
///   `N = ceil(budget_mult ln^2(d/delta) L^2/eps_h^2)` fresh samples, `eta = eps_h/(8L^2)`.
///   Cost per restart: `u * (N + V)`.
/// * Minibatch Lanczos: the operator is the mean over a minibatch of
///   `b = ceil(budget_mult L^2/eps_h^2 / sqrt(d))` samples, fixed for the whole run so
///   the operator stays linear and symmetric. Cost: `u * b * (2 + restarts * (m + 1)) + restarts * u * V`.
///
/// Either way the direction is re-measured on a fresh batch of
/// `V = ceil(validation_mult r^2 ln(2/delta) / eps_h^2)` samples (`r = validation_range`, default `L`) and accepted iff the
/// mean Rayleigh quotient is at most `-eps_h/2 - eps_h/8`.
pub fn approx_nc_stochastic<T, O, R>(
    eval: &mut Evaluator<'_, T, O>,
    x: &[T],
    target: &NcTarget<T>,
    cfg: &NcConfig<T>,
    rng: &mut R,
) -> Result<NcOutcome<T>>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
    R: Rng + ?Sized,
{
    if !eval.capabilities().stochastic {
        return Err(GoseError::NotStochastic);
    }
    cfg.check()?;
    let d = eval.dim();
    let start = eval.counters().oracle_units();
    eval.counters_mut().nc_calls += 1;
    let threshold = -target.eps_h / T::lit(2.0) - target.eps_h / T::lit(8.0);
    let n_val = validation_batch(
        target,
        cfg.validation_range.unwrap_or(target.l),
        cfg.validation_mult,
    );

    let (verdict, best) = match cfg.engine {
        StochasticEngine::Oja => {
            let eta = cfg
                .oja_step
                .unwrap_or(target.eps_h / (T::lit(8.0) * target.l * target.l));
            let steps = oja_sample_budget(d, target, cfg.budget_mult);
            let mut best = T::infinity();
            let mut verdict = NcVerdict::Bottom;
            for _ in 0..cfg.restarts {
                let mut v: Vec<T> = random_unit(d, rng);
                for _ in 0..steps {
                    let key = SampleKey(rng.random());
                    let hv = eval.sample_hvp(x, &v, key);
                    axpy(-eta, &hv, &mut v);
                    if normalize(&mut v) == T::zero() {
                        v = random_unit(d, rng);
                    }
                }
                let r = sample_rayleigh(eval, x, &v, n_val, rng);
                best = best.min(r);
                if r <= threshold {
                    check_unit_direction(&v);
                    verdict = NcVerdict::Direction {
                        direction: v,
                        rayleigh: r,
                    };
                    break;
                }
            }
            (verdict, best)
        }
        StochasticEngine::MinibatchLanczos => {
            let m = deterministic_matvec_budget(d, target, cfg.budget_mult).min(d);
            let b = stochastic_minibatch(d, target, cfg.budget_mult);
            let keys = draw_keys(b, rng);
            let budget = cfg.budget(m);
            // The operator and the validator both need the evaluator; route through a cell.
            let eval_cell = std::cell::RefCell::new(&mut *eval);
            let mut val_rng = ChaCha8Rng::seed_from_u64(rng.random());
            lanczos_restarts(
                |v: &[T]| {
                    let mut ev = eval_cell.borrow_mut();
                    let mut acc = vec![T::zero(); v.len()];
                    for &k in &keys {
                        accumulate(&mut acc, &ev.sample_hvp(x, v, k));
                    }
                    scale(T::one() / T::from_count(keys.len()), &mut acc);
                    acc
                },
                d,
                &budget,
                |v, _| {
                    let mut ev = eval_cell.borrow_mut();
                    let r = sample_rayleigh(&mut **ev, x, v, n_val, &mut val_rng);
                    (r <= threshold, r)
                },
                rng,
            )?
        }
    };
    let cost = eval.counters().oracle_units() - start;
    Ok(NcOutcome {
        verdict,
        measured_rayleigh: best,
        cost,
    })
}

/// Finite-sum finder: Lanczos on the mean of component Hessians over a fixed index
/// minibatch of size `b = min(n, ceil(budget_mult n^{3/4} sqrt(L/eps_h) / m))`, where
/// `m = min(d, ceil(budget_mult ln(d/delta) sqrt(L/eps_h)))` caps the iterations.
/// Each candidate is validated with one full pass over all `n` components and accepted
/// iff `v' H v <= -eps_h/2`. Cost: `u * (2b + restarts * (b (m + 1) + n))`.
pub fn approx_nc_finite_sum<T, O, R>(
    eval: &mut Evaluator<'_, T, O>,
    x: &[T],
    target: &NcTarget<T>,
    cfg: &NcConfig<T>,
    rng: &mut R,
) -> Result<NcOutcome<T>>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
    R: Rng + ?Sized,
{
    let n = eval.oracle().n_components();
    if !eval.capabilities().finite_sum || n == 0 {
        return Err(GoseError::NotFiniteSum);
    }
    cfg.check()?;
    let d = eval.dim();
    let start = eval.counters().oracle_units();
    eval.counters_mut().nc_calls += 1;
    let m = deterministic_matvec_budget(d, target, cfg.budget_mult).min(d);
    let b = finite_sum_minibatch(n, target, cfg.budget_mult, m);
    let indices: Vec<usize> = index::sample(rng, n, b).into_vec();
    let budget = cfg.budget(m);
    let threshold = -target.eps_h / T::lit(2.0);
    let eval_cell = std::cell::RefCell::new(&mut *eval);

    let (verdict, best) = lanczos_restarts(
        |v: &[T]| {
            let mut ev = eval_cell.borrow_mut();
            let mut acc = vec![T::zero(); v.len()];
            for &i in &indices {
                accumulate(&mut acc, &ev.component_hvp(i, x, v));
            }
            scale(T::one() / T::from_count(indices.len()), &mut acc);
            acc
        },
        d,
        &budget,
        |v, _| {
            let mut ev = eval_cell.borrow_mut();
            let mut acc = T::zero();
            for i in 0..n {
                acc = acc + dot(v, &ev.component_hvp(i, x, v));
            }
            let r = acc / T::from_count(n);
            (r <= threshold, r)
        },
        rng,
    )?;
    let cost = eval.counters().oracle_units() - start;
    Ok(NcOutcome {
        verdict,
        measured_rayleigh: best,
        cost,
    })
}
