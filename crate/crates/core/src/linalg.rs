//! Small dense vector helpers over `&[T]`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::scalar::Scalar;

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

#[inline]
pub fn scale<T: Scalar>(alpha: T, x: &mut [T]) {
    for xi in x.iter_mut() {
        *xi = *xi * alpha;
    }
}

pub fn scaled<T: Scalar>(alpha: T, x: &[T]) -> Vec<T> {
    x.iter().map(|&xi| alpha * xi).collect()
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt()
}

/// Normalizes `x` in place and returns its previous norm. Zero vectors are left untouched.
pub fn normalize<T: Scalar>(x: &mut [T]) -> T {
    let n = norm(x);
    if n > T::zero() {
        scale(T::one() / n, x);
    }
    n
}

/// Accumulates `acc += x`.
pub fn accumulate<T: Scalar>(acc: &mut [T], x: &[T]) {
    for (a, &b) in acc.iter_mut().zip(x) {
        *a = *a + b;
    }
}

/// Uniformly distributed point on the unit sphere in `R^d`.
pub fn random_unit<T: Scalar, R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<T> {
    loop {
        let mut v: Vec<T> = (0..d)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                T::lit(z)
            })
            .collect();
        if normalize(&mut v) > T::zero() {
            return v;
        }
    }
}

/// Removes the components of `w` along each (orthonormal) vector in `basis`.
pub fn orthogonalize<T: Scalar>(w: &mut [T], basis: &[Vec<T>]) {
    for q in basis {
        let p = dot(w, q);
        axpy(-p, q, w);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_unit_has_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [1, 2, 17] {
            let v: Vec<f64> = random_unit(d, &mut rng);
            assert!((norm(&v) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn orthogonalize_removes_projection() {
        let basis = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let mut w = vec![3.0, -2.0, 5.0];
        orthogonalize(&mut w, &basis);
        assert_eq!(w, vec![0.0, 0.0, 5.0]);
    }
}
