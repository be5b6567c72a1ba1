use crate::linalg::{dot, random_unit};
use crate::oracle::{Capabilities, Objective, SampleKey};
use crate::scalar::Scalar;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Stochastic view of a deterministic objective with additive Gaussian gradient noise.
///
/// `grad F(x; xi) = grad f(x) + z`, `z ~ N(0, sigma^2/d I)`, so `E|z|^2 = sigma^2`.
/// Sample Hessians are `hess f(x) + tau (r r' - I/d)` with `r` a random unit vector,
/// which is mean-zero with spectral norm at most `tau`. The noise depends only on the
/// sample key, so the same key at two points gives the same draw.
#[derive(Debug, Clone)]
pub struct Noisy<O> {
    inner: O,
    sigma: f64,
    tau: f64,
}

impl<O> Noisy<O> {
    pub fn new(inner: O, sigma: f64, tau: f64) -> Self {
        Self { inner, sigma, tau }
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Variance bound `2 sigma^2`.
    pub fn h_star(&self) -> f64 {
        2.0 * self.sigma * self.sigma
    }
}

fn noise_rng(key: SampleKey, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(key.0);
    r.set_stream(stream);
    r
}

impl<T: Scalar, O: Objective<T>> Objective<T> for Noisy<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[T]) -> T {
        self.inner.value(x)
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        self.inner.gradient(x)
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            stochastic: true,
            ..self.inner.capabilities()
        }
    }

    fn hvp(&self, x: &[T], v: &[T]) -> Vec<T> {
        self.inner.hvp(x, v)
    }

    fn n_components(&self) -> usize {
        self.inner.n_components()
    }

    fn component_gradient(&self, i: usize, x: &[T]) -> Vec<T> {
        self.inner.component_gradient(i, x)
    }

    fn component_hvp(&self, i: usize, x: &[T], v: &[T]) -> Vec<T> {
        self.inner.component_hvp(i, x, v)
    }

    fn sample_gradient(&self, x: &[T], key: SampleKey) -> Vec<T> {
        let mut g = self.inner.gradient(x);
        if self.sigma > 0.0 {
            let s = self.sigma / (g.len() as f64).sqrt();
            let mut rng = noise_rng(key, 1);
            for gi in &mut g {
                let z: f64 = StandardNormal.sample(&mut rng);
                *gi = *gi + T::lit(s * z);
            }
        }
        g
    }

    fn sample_hvp(&self, x: &[T], v: &[T], key: SampleKey) -> Vec<T> {
        let mut h = self.inner.hvp(x, v);
        if self.tau > 0.0 {
            let mut rng = noise_rng(key, 2);
            let r: Vec<T> = random_unit(v.len(), &mut rng);
            let tau = T::lit(self.tau);
            let rv = dot(&r, v);
            let inv_d = T::one() / T::from_count(v.len());
            for ((hi, &ri), &vi) in h.iter_mut().zip(&r).zip(v) {
                *hi = *hi + tau * (ri * rv - inv_d * vi);
            }
        }
        h
    }
}

/// Finite sum of `n` identical copies of a deterministic objective.
#[derive(Debug, Clone)]
pub struct Replicated<O> {
    inner: O,
    n: usize,
}

impl<O> Replicated<O> {
    pub fn new(inner: O, n: usize) -> Self {
        assert!(n >= 1);
        Self { inner, n }
    }
}

impl<T: Scalar, O: Objective<T>> Objective<T> for Replicated<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[T]) -> T {
        self.inner.value(x)
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        self.inner.gradient(x)
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            finite_sum: true,
            ..self.inner.capabilities()
        }
    }

    fn hvp(&self, x: &[T], v: &[T]) -> Vec<T> {
        self.inner.hvp(x, v)
    }

    fn n_components(&self) -> usize {
        self.n
    }

    fn component_gradient(&self, _i: usize, x: &[T]) -> Vec<T> {
        self.inner.gradient(x)
    }

    fn component_hvp(&self, _i: usize, x: &[T], v: &[T]) -> Vec<T> {
        self.inner.hvp(x, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::quadratic::{Quadratic, SymMatrix};

    #[test]
    fn same_key_same_noise() {
        let f = Noisy::new(
            Quadratic::new(SymMatrix::<f64>::planted(&[1.0, -1.0], None)),
            0.3,
            0.1,
        );
        let a = f.sample_gradient(&[0.0, 0.0], SampleKey(7));
        let b = f.sample_gradient(&[1.0, 0.0], SampleKey(7));
        assert!(((b[0] - a[0]) - 1.0).abs() < 1e-15 && (b[1] - a[1]).abs() < 1e-15);
        assert_ne!(a, f.sample_gradient(&[0.0, 0.0], SampleKey(8)));
    }

    #[test]
    fn hessian_noise_is_bounded() {
        let f = Noisy::new(
            Quadratic::new(SymMatrix::<f64>::planted(&[0.0; 3], None)),
            0.0,
            0.2,
        );
        for k in 0..50 {
            let v = [0.6, 0.0, 0.8];
            let hv = f.sample_hvp(&[0.0; 3], &v, SampleKey(k));
            assert!(crate::linalg::norm(&hv) <= 0.2 + 1e-12);
        }
    }
}
