use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tridiag;
use crate::error::{GoseError, Result};
use crate::linalg::{axpy, dot, norm, orthogonalize, random_unit, scale};
use crate::scalar::Scalar;

/// Iteration limits for one negative-curvature search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NcBudget<T> {
    /// Cap on Lanczos iterations (one operator application each).
    pub max_matvecs: usize,
    /// Independent random starts before giving up.
    pub restarts: usize,
    /// Early exit once the Ritz residual `beta_k |s_k|` drops below `residual_tol * max(1, |theta|)`.
    pub residual_tol: T,
    /// Relative tolerance of the symmetry probe.
    pub symmetry_tol: T,
}

impl<T: Scalar> NcBudget<T> {
    pub fn new(max_matvecs: usize) -> Self {
        Self {
            max_matvecs,
            restarts: 1,
            residual_tol: default_residual_tol(),
            symmetry_tol: default_symmetry_tol(),
        }
    }
}

pub(crate) fn default_residual_tol<T: Scalar>() -> T {
    T::epsilon().sqrt() * T::lit(1e-2)
}

pub(crate) fn default_symmetry_tol<T: Scalar>() -> T {
    (T::epsilon().sqrt() * T::lit(1e4)).min(T::lit(1e-2))
}

/// Result of a Lanczos run.
#[derive(Debug, Clone, PartialEq)]
pub struct LanczosResult<T> {
    /// Rayleigh quotient `v' H v` recomputed with one extra product at exit.
    pub lambda: T,
    /// Unit Ritz vector for the smallest Ritz value.
    pub vector: Vec<T>,
    /// Smallest eigenvalue of the final tridiagonal matrix.
    pub ritz_value: T,
    pub iterations: usize,
    /// Operator applications, including the exit recomputation.
    pub matvecs: usize,
}

/// Checks `|u' H w - w' H u| <= tol * (|Hu| + |Hw|)` on two random unit probes.
/// Costs two operator applications.
pub fn symmetry_probe<T, H, R>(hvp: &mut H, d: usize, tol: T, rng: &mut R) -> Result<()>
where
    T: Scalar,
    H: FnMut(&[T]) -> Vec<T>,
    R: Rng + ?Sized,
{
    let u: Vec<T> = random_unit(d, rng);
    let w: Vec<T> = random_unit(d, rng);
    let hu = hvp(&u);
    let hw = hvp(&w);
    let defect = (dot(&u, &hw) - dot(&w, &hu)).abs();
    let allowed = tol * (norm(&hu) + norm(&hw)) + T::epsilon() * T::lit(16.0);
    if defect > allowed || !defect.is_finite() {
        return Err(GoseError::AsymmetricOperator {
            defect: defect.as_f64(),
            tolerance: allowed.as_f64(),
        });
    }
    Ok(())
}

/// Approximates the smallest eigenpair of the symmetric operator `hvp` on `R^d`.
///
/// Starts from a uniformly random unit vector, keeps the Krylov basis fully
/// reorthogonalized and solves the tridiagonal eigenproblem after every step. Stops
/// after `budget.max_matvecs` steps, at an invariant subspace, at `d` steps or when
/// the Ritz residual is below tolerance. A symmetry probe runs first (two extra
/// products), so the total cost is at most `max_matvecs + 3` applications.
pub fn lanczos_min_eig<T, H, R>(
    mut hvp: H,
    d: usize,
    budget: &NcBudget<T>,
    rng: &mut R,
) -> Result<LanczosResult<T>>
where
    T: Scalar,
    H: FnMut(&[T]) -> Vec<T>,
    R: Rng + ?Sized,
{
    if budget.max_matvecs == 0 {
        return Err(GoseError::BudgetZero);
    }
    symmetry_probe(&mut hvp, d, budget.symmetry_tol, rng)?;
    Ok(lanczos_unchecked(&mut hvp, d, budget, rng))
}

/// Lanczos iteration without the symmetry probe. `budget.max_matvecs` must be positive.
pub(crate) fn lanczos_unchecked<T, H, R>(
    hvp: &mut H,
    d: usize,
    budget: &NcBudget<T>,
    rng: &mut R,
) -> LanczosResult<T>
where
    T: Scalar,
    H: FnMut(&[T]) -> Vec<T>,
    R: Rng + ?Sized,
{
    let max_iter = budget.max_matvecs.min(d).max(1);
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(max_iter);
    let mut alpha: Vec<T> = Vec::with_capacity(max_iter);
    let mut beta: Vec<T> = Vec::with_capacity(max_iter);
    let mut q: Vec<T> = random_unit(d, rng);
    let mut matvecs = 0;

    let mut theta;
    let mut s: Vec<T>;
    let mut op_scale = T::zero();

    loop {
        let mut w = hvp(&q);
        matvecs += 1;
        let a = dot(&q, &w);
        op_scale = op_scale.max(norm(&w));
        axpy(-a, &q, &mut w);
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            axpy(-b, prev, &mut w);
        }
        basis.push(q);
        alpha.push(a);
        // twice is enough
        orthogonalize(&mut w, &basis);
        orthogonalize(&mut w, &basis);

        let off = &beta[..alpha.len() - 1];
        theta = tridiag::min_eigenvalue(&alpha, off);
        s = tridiag::eigenvector(&alpha, off, theta);

        let b = norm(&w);
        let resid = b * s.last().copied().unwrap_or(T::zero()).abs();
        let breakdown = b <= T::epsilon() * T::lit(64.0) * op_scale.max(T::one());
        if basis.len() >= max_iter
            || breakdown
            || resid <= budget.residual_tol * theta.abs().max(T::one())
        {
            break;
        }
        scale(T::one() / b, &mut w);
        beta.push(b);
        q = w;
    }

    let mut v = vec![T::zero(); d];
    for (coef, qi) in s.iter().zip(&basis) {
        axpy(*coef, qi, &mut v);
    }
    crate::linalg::normalize(&mut v);
    let hv = hvp(&v);
    matvecs += 1;
    LanczosResult {
        lambda: dot(&v, &hv),
        vector: v,
        ritz_value: theta,
        iterations: basis.len(),
        matvecs,
    }
}
