use nalgebra::DMatrix;

use crate::error::{GoseError, Result};
use crate::linalg::norm;
use crate::oracle::{fd_hvp_with, Objective};
use crate::scalar::Scalar;

/// Largest dimension for which a dense Hessian is assembled.
pub const MAX_DENSE_DIM: usize = 500;

/// Ground-truth second-order check at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certification {
    pub passed: bool,
    pub grad_norm: f64,
    pub lambda_min: f64,
}

/// Dense symmetrized Hessian assembled column by column from `d` Hessian-vector products.
/// Uses the analytic product when available and gradient differences otherwise.
/// Does not go through an evaluator, so nothing is charged to a run.
pub fn dense_hessian<T: Scalar, O: Objective<T> + ?Sized>(
    oracle: &O,
    x: &[T],
) -> Result<DMatrix<f64>> {
    let d = oracle.dim();
    if d > MAX_DENSE_DIM {
        return Err(GoseError::DimensionTooLarge {
            d,
            max: MAX_DENSE_DIM,
        });
    }
    if x.len() != d {
        return Err(GoseError::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let analytic = oracle.capabilities().analytic_hvp;
    let mut h = DMatrix::<f64>::zeros(d, d);
    let mut e = vec![T::zero(); d];
    for j in 0..d {
        e[j] = T::one();
        let col = if analytic {
            oracle.hvp(x, &e)
        } else {
            fd_hvp_with(|p| oracle.gradient(p), x, &e)?
        };
        for (i, c) in col.iter().enumerate() {
            h[(i, j)] = c.as_f64();
        }
        e[j] = T::zero();
    }
    Ok((&h + h.transpose()) * 0.5)
}

pub fn min_eigenvalue(h: &DMatrix<f64>) -> f64 {
    h.symmetric_eigenvalues().min()
}

/// Checks `|grad f(x)| <= eps` and `lambda_min(hess f(x)) >= -eps_h` with a dense
/// eigendecomposition.
pub fn certify_second_order<T: Scalar, O: Objective<T> + ?Sized>(
    oracle: &O,
    x: &[T],
    eps: f64,
    eps_h: f64,
) -> Result<Certification> {
    let h = dense_hessian(oracle, x)?;
    let grad_norm = norm(&oracle.gradient(x)).as_f64();
    let lambda_min = min_eigenvalue(&h);
    Ok(Certification {
        passed: grad_norm <= eps && lambda_min >= -eps_h,
        grad_norm,
        lambda_min,
    })
}
