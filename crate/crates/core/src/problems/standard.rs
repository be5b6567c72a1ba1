use crate::oracle::{Capabilities, Objective};
use crate::scalar::Scalar;

fn deterministic() -> Capabilities {
    Capabilities {
        deterministic: true,
        analytic_hvp: true,
        ..Capabilities::default()
    }
}

/// Chained Rosenbrock function `sum_i 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2`.
#[derive(Debug, Clone)]
pub struct Rosenbrock {
    pub d: usize,
}

impl<T: Scalar> Objective<T> for Rosenbrock {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[T]) -> T {
        let hundred = T::lit(100.0);
        x.windows(2)
            .map(|w| {
                let a = w[1] - w[0] * w[0];
                let b = T::one() - w[0];
                hundred * a * a + b * b
            })
            .sum()
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); self.d];
        for i in 0..self.d - 1 {
            let a = x[i + 1] - x[i] * x[i];
            g[i] = g[i] - T::lit(400.0) * x[i] * a - T::lit(2.0) * (T::one() - x[i]);
            g[i + 1] = g[i + 1] + T::lit(200.0) * a;
        }
        g
    }

    fn capabilities(&self) -> Capabilities {
        deterministic()
    }

    fn hvp(&self, x: &[T], v: &[T]) -> Vec<T> {
        let mut h = vec![T::zero(); self.d];
        for i in 0..self.d - 1 {
            let hii = T::lit(1200.0) * x[i] * x[i] - T::lit(400.0) * x[i + 1] + T::lit(2.0);
            let hij = T::lit(-400.0) * x[i];
            h[i] = h[i] + hii * v[i] + hij * v[i + 1];
            h[i + 1] = h[i + 1] + hij * v[i] + T::lit(200.0) * v[i + 1];
        }
        h
    }
}

/// Rastrigin function `10 d + sum_i x_i^2 - 10 cos(2 pi x_i)`.
#[derive(Debug, Clone)]
pub struct Rastrigin {
    pub d: usize,
}

impl<T: Scalar> Objective<T> for Rastrigin {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[T]) -> T {
        let ten = T::lit(10.0);
        let tau = T::lit(std::f64::consts::TAU);
        ten * T::from_count(self.d) + x.iter().map(|&v| v * v - ten * (tau * v).cos()).sum::<T>()
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        let tau = T::lit(std::f64::consts::TAU);
        x.iter()
            .map(|&v| T::lit(2.0) * v + T::lit(10.0) * tau * (tau * v).sin())
            .collect()
    }

    fn capabilities(&self) -> Capabilities {
        deterministic()
    }

    fn hvp(&self, x: &[T], v: &[T]) -> Vec<T> {
        let tau = T::lit(std::f64::consts::TAU);
        x.iter()
            .zip(v)
            .map(|(&xi, &vi)| (T::lit(2.0) + T::lit(10.0) * tau * tau * (tau * xi).cos()) * vi)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_minima() {
        let r = Rosenbrock { d: 2 };
        assert_eq!(Objective::<f64>::value(&r, &[1.0, 1.0]), 0.0);
        assert_eq!(Objective::<f64>::gradient(&r, &[1.0, 1.0]), vec![0.0, 0.0]);
        let q = Rastrigin { d: 2 };
        assert_eq!(Objective::<f64>::value(&q, &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn rosenbrock_gradient_matches_central_differences() {
        use rand::{Rng, SeedableRng};
        let r = Rosenbrock { d: 4 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g = r.gradient(&x);
            for i in 0..4 {
                let h = 1e-6 * (1.0 + x[i].abs());
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (r.value(&xp) - r.value(&xm)) / (2.0 * h);
                assert!(
                    (fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0),
                    "{fd} vs {}",
                    g[i]
                );
            }
        }
    }
}
