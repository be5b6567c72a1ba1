#![allow(dead_code)]

use gose::problems::{dense_hessian, min_eigenvalue};
use gose::{
    validate_config, Mode, Objective, SmoothnessSpecF64, ToleranceConfigF64, ValidatedConfigF64,
};
use rand::Rng;

pub fn config(eps: f64, eps_h: f64, l: f64, rho: f64, mode: Mode) -> ValidatedConfigF64 {
    config_with(eps, eps_h, l, rho, mode, |_| {})
}

pub fn config_with(
    eps: f64,
    eps_h: f64,
    l: f64,
    rho: f64,
    mode: Mode,
    tweak: impl FnOnce(&mut SmoothnessSpecF64),
) -> ValidatedConfigF64 {
    let tol = ToleranceConfigF64 {
        eps,
        eps_h,
        ..Default::default()
    };
    let mut smooth = SmoothnessSpecF64 {
        l,
        rho,
        ..Default::default()
    };
    tweak(&mut smooth);
    validate_config(&tol, &smooth, mode).expect("test config must validate")
}

/// `lambda_min` first, the remaining `d - 1` eigenvalues uniform on `[lo, hi]`.
pub fn planted_spectrum<R: Rng>(
    d: usize,
    lambda_min: f64,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Vec<f64> {
    let mut s: Vec<f64> = (0..d).map(|_| rng.random_range(lo..hi)).collect();
    s[0] = lambda_min;
    s
}

/// Smallest Hessian eigenvalue from a dense eigendecomposition.
pub fn dense_min_eig<O: Objective<f64> + ?Sized>(oracle: &O, x: &[f64]) -> f64 {
    min_eigenvalue(&dense_hessian(oracle, x).unwrap())
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn rayleigh<O: Objective<f64> + ?Sized>(oracle: &O, x: &[f64], v: &[f64]) -> f64 {
    let h = dense_hessian(oracle, x).unwrap();
    let v = nalgebra::DVector::from_column_slice(v);
    (v.transpose() * &h * &v)[(0, 0)] / v.norm_squared()
}
