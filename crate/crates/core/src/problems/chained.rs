//! A chain of strict saddles glued together with smooth gates.
//!
//! In unscaled coordinates `z = x / scale` the objective is
//!
//! ```text
//! g(z) = sum_i  z_i^4 / 4 + c_i(z) z_i^2 / 2,
//! c_1 = -gamma,    c_i = l0 - (l0 + gamma) * gate(z_{i-1})   (i >= 2),
//! ```
//!
//! where `gate(t) = u (2 - u)`, `u = t^2 / gamma`, rises from 0 at `t = 0` to its maximum 1 at
//! `t = m`, with zero slope there. Coordinate `i`
//! only turns unstable once coordinate `i-1` has settled at `m = sqrt(gamma)`, so descent
//! from the origin region visits the saddles `s_k = (m, .., m, 0, .., 0)` one after another
//! before reaching the minimum `(m, .., m)`. Each `s_k` has exactly one negative Hessian
//! eigenvalue, `-gamma`. The objective is `f(x) = scale^2 g(x / scale)`, which keeps the
//! curvature values unchanged and divides the Hessian-Lipschitz constant by `scale`.

use crate::oracle::{Capabilities, Objective};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    pub gamma: f64,
    pub l0: f64,
    pub scale: f64,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            l0: 1.0,
            scale: 80.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainedSaddles<T> {
    d: usize,
    gamma: T,
    l0: T,
    scale: T,
}

impl<T: Scalar> ChainedSaddles<T> {
    pub fn new(d: usize, p: ChainParams) -> Self {
        assert!(d >= 2, "chain needs at least two coordinates");
        Self {
            d,
            gamma: T::lit(p.gamma),
            l0: T::lit(p.l0),
            scale: T::lit(p.scale),
        }
    }

    /// Resting value `sqrt(gamma)` of a coordinate after its saddle has been passed, in `x` units.
    pub fn settled(&self) -> T {
        self.gamma.sqrt() * self.scale
    }

    /// `s_k` for `k = 0..d`; `k = d` is the minimum.
    pub fn stage_point(&self, k: usize) -> Vec<T> {
        (0..self.d)
            .map(|i| if i < k { self.settled() } else { T::zero() })
            .collect()
    }

    pub fn min_value(&self) -> T {
        -T::from_count(self.d) * self.gamma * self.gamma / T::lit(4.0) * self.scale * self.scale
    }

    /// gate(t) = u (2 - u) with u = t^2 / m^2, and its derivatives in t.
    fn gate(&self, t: T) -> (T, T, T) {
        let m2 = self.gamma;
        let two = T::lit(2.0);
        let u = t * t / m2;
        let s = u * (two - u);
        let ds = T::lit(4.0) * t / m2 * (T::one() - u);
        let dds = T::lit(4.0) / m2 * (T::one() - T::lit(3.0) * u);
        (s, ds, dds)
    }

    /// Coefficient `c_i` and its derivatives with respect to `z_{i-1}`.
    fn coeff(&self, z: &[T], i: usize) -> (T, T, T) {
        if i == 0 {
            return (-self.gamma, T::zero(), T::zero());
        }
        let k = -(self.l0 + self.gamma);
        let (s, ds, dds) = self.gate(z[i - 1]);
        (self.l0 + k * s, k * ds, k * dds)
    }

    fn unscaled(&self, x: &[T]) -> Vec<T> {
        x.iter().map(|&v| v / self.scale).collect()
    }

    /// Tridiagonal Hessian of `g` at `z`: (diagonal, super-diagonal).
    fn hessian_bands(&self, z: &[T]) -> (Vec<T>, Vec<T>) {
        let d = self.d;
        let half = T::lit(0.5);
        let mut diag = vec![T::zero(); d];
        let mut off = vec![T::zero(); d - 1];
        for i in 0..d {
            let (c, _, _) = self.coeff(z, i);
            diag[i] = T::lit(3.0) * z[i] * z[i] + c;
            if i + 1 < d {
                let (_, dc, ddc) = self.coeff(z, i + 1);
                diag[i] = diag[i] + half * ddc * z[i + 1] * z[i + 1];
                off[i] = dc * z[i + 1];
            }
        }
        (diag, off)
    }
}

impl<T: Scalar> Objective<T> for ChainedSaddles<T> {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[T]) -> T {
        let z = self.unscaled(x);
        let quarter = T::lit(0.25);
        let half = T::lit(0.5);
        let g: T = (0..self.d)
            .map(|i| {
                let zi2 = z[i] * z[i];
                quarter * zi2 * zi2 + half * self.coeff(&z, i).0 * zi2
            })
            .sum();
        g * self.scale * self.scale
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        let z = self.unscaled(x);
        let half = T::lit(0.5);
        (0..self.d)
            .map(|i| {
                let mut gi = z[i] * z[i] * z[i] + self.coeff(&z, i).0 * z[i];
                if i + 1 < self.d {
                    let dc = self.coeff(&z, i + 1).1;
                    gi = gi + half * dc * z[i + 1] * z[i + 1];
                }
                gi * self.scale
            })
            .collect()
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            deterministic: true,
            analytic_hvp: true,
            ..Capabilities::default()
        }
    }

    fn hvp(&self, x: &[T], v: &[T]) -> Vec<T> {
        let z = self.unscaled(x);
        let (diag, off) = self.hessian_bands(&z);
        (0..self.d)
            .map(|i| {
                let mut r = diag[i] * v[i];
                if i > 0 {
                    r = r + off[i - 1] * v[i - 1];
                }
                if i + 1 < self.d {
                    r = r + off[i] * v[i + 1];
                }
                r
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    #[test]
    fn stage_points_are_critical_with_one_negative_direction() {
        let f = ChainedSaddles::<f64>::new(4, ChainParams::default());
        for k in 0..=4 {
            let s = f.stage_point(k);
            assert!(norm(&f.gradient(&s)) < 1e-12, "stage {k}");
            let z: Vec<f64> = s.iter().map(|v| v / 80.0).collect();
            let (diag, off) = f.hessian_bands(&z);
            assert!(off.iter().all(|&o| o == 0.0));
            let negatives = diag.iter().filter(|&&h| h < 0.0).count();
            assert_eq!(negatives, usize::from(k < 4));
            if k < 4 {
                assert_eq!(diag[k], -1.0);
            }
        }
        assert!((f.value(&f.stage_point(4)) - f.min_value()).abs() < 1e-9);
    }
}
