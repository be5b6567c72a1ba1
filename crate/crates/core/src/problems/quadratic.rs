use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::oracle::{Capabilities, Objective};
use crate::scalar::Scalar;

/// Dense symmetric matrix in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    d: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    /// `Q diag(spectrum) Q'` with a Haar-like orthogonal `Q` drawn from `seed`.
    /// `seed = None` uses the identity basis.
    pub fn planted(spectrum: &[f64], seed: Option<u64>) -> Self {
        let d = spectrum.len();
        let q = match seed {
            Some(s) => random_orthogonal(d, s),
            None => DMatrix::identity(d, d),
        };
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(spectrum));
        let a = &q * lam * q.transpose();
        let mut data = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                // exact symmetry, independent of rounding in the product
                data.push(T::lit(0.5 * (a[(i, j)] + a[(j, i)])));
            }
        }
        Self { d, data }
    }

    pub fn from_rows(d: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), d * d);
        Self { d, data }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.d + j]
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        self.data
            .chunks_exact(self.d)
            .map(|row| row.iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }
}

pub(crate) fn random_orthogonal(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // fix column signs so Q is uniformly distributed
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `f(x) = x' A x / 2` for a symmetric `A`.
#[derive(Debug, Clone)]
pub struct Quadratic<T> {
    a: SymMatrix<T>,
}

impl<T: Scalar> Quadratic<T> {
    pub fn new(a: SymMatrix<T>) -> Self {
        Self { a }
    }

    pub fn matrix(&self) -> &SymMatrix<T> {
        &self.a
    }
}

impl<T: Scalar> Objective<T> for Quadratic<T> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn value(&self, x: &[T]) -> T {
        let ax = self.a.matvec(x);
        crate::linalg::dot(x, &ax) / T::lit(2.0)
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        self.a.matvec(x)
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            deterministic: true,
            analytic_hvp: true,
            ..Capabilities::default()
        }
    }

    fn hvp(&self, _x: &[T], v: &[T]) -> Vec<T> {
        self.a.matvec(v)
    }
}
