//! Smallest eigenpair of a symmetric tridiagonal matrix.
//!
//! The eigenvalue comes from Sturm-sequence bisection, the eigenvector from
//! inverse iteration with a partially pivoted tridiagonal solve.

use crate::scalar::Scalar;

/// Number of eigenvalues of `T` strictly below `x`.
fn sturm_count<T: Scalar>(diag: &[T], off: &[T], x: T, pivmin: T) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < T::zero() {
        count += 1;
    }
    for i in 1..diag.len() {
        q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < T::zero() {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue of the tridiagonal matrix with diagonal `diag` and off-diagonal `off`.
pub fn min_eigenvalue<T: Scalar>(diag: &[T], off: &[T]) -> T {
    let n = diag.len();
    assert!(n > 0 && off.len() + 1 == n);
    if n == 1 {
        return diag[0];
    }
    // Gershgorin interval
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { T::zero() }
            + if i + 1 < n { off[i].abs() } else { T::zero() };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(T::min_positive_value());
    let pivmin = T::min_positive_value().sqrt() * scale.max(T::one());
    let tol = T::epsilon() * scale * T::lit(2.0);
    for _ in 0..256 {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) * T::lit(0.5);
        if sturm_count(diag, off, mid, pivmin) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo + hi) * T::lit(0.5)
}

/// Solves `(T - shift I) x = rhs` by Gaussian elimination with partial pivoting.
/// Zero pivots are replaced by `tiny` so the solve always completes.
fn shifted_solve<T: Scalar>(diag: &[T], off: &[T], shift: T, rhs: &[T], tiny: T) -> Vec<T> {
    let n = diag.len();
    let mut sub: Vec<T> = off.to_vec();
    let mut d: Vec<T> = diag.iter().map(|&a| a - shift).collect();
    let mut up: Vec<T> = off.to_vec();
    let mut up2 = vec![T::zero(); n.saturating_sub(2)];
    let mut b = rhs.to_vec();
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= sub[i].abs() {
            if d[i].abs() < tiny {
                d[i] = tiny;
            }
            let m = sub[i] / d[i];
            d[i + 1] = d[i + 1] - m * up[i];
            b[i + 1] = b[i + 1] - m * b[i];
        } else {
            let m = d[i] / sub[i];
            d[i] = sub[i];
            let next_d = d[i + 1];
            d[i + 1] = up[i] - m * next_d;
            up[i] = next_d;
            if i + 2 < n {
                up2[i] = up[i + 1];
                up[i + 1] = -m * up2[i];
            }
            b.swap(i, i + 1);
            b[i + 1] = b[i + 1] - m * b[i];
        }
        sub[i] = T::zero();
    }
    if d[n - 1].abs() < tiny {
        d[n - 1] = tiny;
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        if i + 1 < n {
            acc = acc - up[i] * x[i + 1];
        }
        if i + 2 < n {
            acc = acc - up2[i] * x[i + 2];
        }
        x[i] = acc / d[i];
    }
    x
}

/// Unit eigenvector of the tridiagonal matrix for eigenvalue `lambda` (inverse iteration).
pub fn eigenvector<T: Scalar>(diag: &[T], off: &[T], lambda: T) -> Vec<T> {
    let n = diag.len();
    if n == 1 {
        return vec![T::one()];
    }
    let scale = diag
        .iter()
        .chain(off.iter())
        .fold(T::zero(), |m, &a| m.max(a.abs()))
        .max(T::min_positive_value());
    let tiny = T::epsilon() * scale;
    // Alternating-magnitude start avoids being orthogonal to the target by symmetry.
    let mut x: Vec<T> = (0..n)
        .map(|i| T::one() + T::lit(0.1) * T::from_count(i % 7))
        .collect();
    crate::linalg::normalize(&mut x);
    for _ in 0..4 {
        let mut y = shifted_solve(diag, off, lambda, &x, tiny);
        let nrm = crate::linalg::normalize(&mut y);
        if !nrm.is_finite() || nrm == T::zero() {
            break;
        }
        x = y;
    }
    x
}
