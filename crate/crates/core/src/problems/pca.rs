use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::dot;
use crate::oracle::{Capabilities, Objective};
use crate::scalar::Scalar;

/// Nonconvex PCA as a finite sum:
/// `f(x) = (1/n) sum_i -(a_i' x)^2 / 2 + |x|^4 / 4`.
///
/// With `C = (1/n) sum_i a_i a_i'` and top eigenpair `(lambda_1, u_1)` the global minima
/// are `+-sqrt(lambda_1) u_1` with value `-lambda_1^2 / 4`. The remaining critical points
/// (origin and `+-sqrt(lambda_j) u_j`) are strict saddles when the spectrum is simple.
#[derive(Debug, Clone)]
pub struct NonconvexPca<T> {
    d: usize,
    data: Vec<Vec<T>>,
}

/// Top eigenpair of the empirical covariance, in `f64`.
#[derive(Debug, Clone)]
pub struct CovarianceSpectrum {
    /// Eigenvalues sorted in decreasing order.
    pub eigenvalues: Vec<f64>,
    pub top_vector: Vec<f64>,
}

impl<T: Scalar> NonconvexPca<T> {
    pub fn from_data(data: Vec<Vec<T>>) -> Self {
        assert!(!data.is_empty());
        let d = data[0].len();
        assert!(d >= 1 && data.iter().all(|a| a.len() == d));
        Self { d, data }
    }

    /// Draws `n` vectors `a_i = Sigma^{1/2} z_i` with `Sigma = diag(spike, base, .., base)`
    /// in a random orthonormal basis.
    pub fn spiked(n: usize, d: usize, spike: f64, base: f64, seed: u64) -> Self {
        assert!(n >= 1 && d >= 2);
        let q = super::quadratic::random_orthogonal(d, seed ^ 0x0005_eed0_f9ca);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n)
            .map(|_| {
                let z = DVector::<f64>::from_fn(d, |i, _| {
                    let s: f64 = StandardNormal.sample(&mut rng);
                    s * if i == 0 { spike.sqrt() } else { base.sqrt() }
                });
                let a = &q * z;
                a.iter().map(|&v| T::lit(v)).collect()
            })
            .collect();
        Self { d, data }
    }

    pub fn n(&self) -> usize {
        self.data.len()
    }

    pub fn covariance_spectrum(&self) -> CovarianceSpectrum {
        let n = self.data.len() as f64;
        let mut c = DMatrix::<f64>::zeros(self.d, self.d);
        for a in &self.data {
            let v = DVector::from_iterator(self.d, a.iter().map(|x| x.as_f64()));
            c += &v * v.transpose() / n;
        }
        let eig = c.symmetric_eigen();
        let mut order: Vec<usize> = (0..self.d).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        CovarianceSpectrum {
            eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
            top_vector: eig.eigenvectors.column(order[0]).iter().copied().collect(),
        }
    }

    /// Global minimum value `-lambda_1^2 / 4`.
    pub fn min_value(&self) -> f64 {
        let l1 = self.covariance_spectrum().eigenvalues[0];
        -l1 * l1 / 4.0
    }

    pub fn minimizer(&self) -> Vec<T> {
        let s = self.covariance_spectrum();
        let r = s.eigenvalues[0].sqrt();
        s.top_vector.iter().map(|&u| T::lit(r * u)).collect()
    }

    fn quartic_grad(x: &[T]) -> Vec<T> {
        let r2 = dot(x, x);
        x.iter().map(|&v| r2 * v).collect()
    }

    fn quartic_hvp(x: &[T], v: &[T]) -> Vec<T> {
        let r2 = dot(x, x);
        let xv = dot(x, v) * T::lit(2.0);
        x.iter()
            .zip(v)
            .map(|(&xi, &vi)| r2 * vi + xv * xi)
            .collect()
    }
}

impl<T: Scalar> Objective<T> for NonconvexPca<T> {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[T]) -> T {
        let n = T::from_count(self.n());
        let quad: T = self.data.iter().map(|a| dot(a, x) * dot(a, x)).sum::<T>() / n;
        let r2 = dot(x, x);
        -quad / T::lit(2.0) + r2 * r2 / T::lit(4.0)
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        let n = T::from_count(self.n());
        let mut g = Self::quartic_grad(x);
        for a in &self.data {
            let s = dot(a, x) / n;
            for (gi, &ai) in g.iter_mut().zip(a) {
                *gi = *gi - s * ai;
            }
        }
        g
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            deterministic: true,
            finite_sum: true,
            stochastic: false,
            analytic_hvp: true,
        }
    }

    fn hvp(&self, x: &[T], v: &[T]) -> Vec<T> {
        let n = T::from_count(self.n());
        let mut h = Self::quartic_hvp(x, v);
        for a in &self.data {
            let s = dot(a, v) / n;
            for (hi, &ai) in h.iter_mut().zip(a) {
                *hi = *hi - s * ai;
            }
        }
        h
    }

    fn n_components(&self) -> usize {
        self.n()
    }

    fn component_gradient(&self, i: usize, x: &[T]) -> Vec<T> {
        let a = &self.data[i];
        let s = dot(a, x);
        let mut g = Self::quartic_grad(x);
        for (gi, &ai) in g.iter_mut().zip(a) {
            *gi = *gi - s * ai;
        }
        g
    }

    fn component_hvp(&self, i: usize, x: &[T], v: &[T]) -> Vec<T> {
        let a = &self.data[i];
        let s = dot(a, v);
        let mut h = Self::quartic_hvp(x, v);
        for (hi, &ai) in h.iter_mut().zip(a) {
            *hi = *hi - s * ai;
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    #[test]
    fn single_axis_hessian_at_origin() {
        let f = NonconvexPca::from_data(vec![vec![1.0f64, 0.0]]);
        assert_eq!(f.hvp(&[0.0, 0.0], &[1.0, 0.0]), vec![-1.0, 0.0]);
        assert_eq!(f.hvp(&[0.0, 0.0], &[0.0, 1.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn minimizer_is_stationary() {
        let f = NonconvexPca::<f64>::spiked(60, 6, 2.0, 0.2, 3);
        let x = f.minimizer();
        assert!(norm(&f.gradient(&x)) <= 1e-8);
        assert!((f.value(&x) - f.min_value()).abs() < 1e-10);
    }

    #[test]
    fn components_average_to_full_gradient() {
        let f = NonconvexPca::<f64>::spiked(40, 5, 2.0, 0.2, 9);
        let x = [0.3, -0.2, 0.1, 0.5, -0.4];
        let mut mean = vec![0.0; 5];
        for i in 0..40 {
            crate::linalg::accumulate(&mut mean, &f.component_gradient(i, &x));
        }
        let full = f.gradient(&x);
        for (m, g) in mean.iter().zip(&full) {
            assert!((m / 40.0 - g).abs() <= 1e-12 * (1.0 + g.abs()));
        }
    }
}
