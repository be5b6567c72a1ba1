use crate::oracle::{Capabilities, Objective};
use crate::scalar::Scalar;

/// `f(x) = -x_1^2/2 + kappa x_1^4/4 + mu/2 * sum_{j>1} x_j^2`.
///
/// One strict saddle at the origin (curvature `-1` along `e_1`) between the two global
/// minima `x_1 = +-1/sqrt(kappa)` with value `-1/(4 kappa)`.
#[derive(Debug, Clone)]
pub struct DoubleWell<T> {
    d: usize,
    kappa: T,
    mu: T,
}

impl<T: Scalar> DoubleWell<T> {
    pub fn new(d: usize, kappa: f64, mu: f64) -> Self {
        assert!(d >= 1 && kappa > 0.0 && mu > 0.0);
        Self {
            d,
            kappa: T::lit(kappa),
            mu: T::lit(mu),
        }
    }

    pub fn minimizer(&self) -> Vec<T> {
        let mut x = vec![T::zero(); self.d];
        x[0] = T::one() / self.kappa.sqrt();
        x
    }

    pub fn min_value(&self) -> T {
        -T::one() / (T::lit(4.0) * self.kappa)
    }
}

impl<T: Scalar> Objective<T> for DoubleWell<T> {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[T]) -> T {
        let half = T::lit(0.5);
        let x1 = x[0];
        let rest: T = x[1..].iter().map(|&v| v * v).sum();
        -half * x1 * x1 + self.kappa * x1 * x1 * x1 * x1 / T::lit(4.0) + half * self.mu * rest
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        let mut g: Vec<T> = x.iter().map(|&v| self.mu * v).collect();
        g[0] = -x[0] + self.kappa * x[0] * x[0] * x[0];
        g
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            deterministic: true,
            analytic_hvp: true,
            ..Capabilities::default()
        }
    }

    fn hvp(&self, x: &[T], v: &[T]) -> Vec<T> {
        let mut h: Vec<T> = v.iter().map(|&w| self.mu * w).collect();
        h[0] = (T::lit(3.0) * self.kappa * x[0] * x[0] - T::one()) * v[0];
        h
    }
}
