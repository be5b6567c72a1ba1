//! Test problems with known smoothness constants, planted saddles and a dense
//! second-order certifier.

mod certify;
mod chained;
mod double_well;
mod pca;
mod quadratic;
mod standard;
mod wrappers;

pub use certify::{
    certify_second_order, dense_hessian, min_eigenvalue, Certification, MAX_DENSE_DIM,
};
pub use chained::{ChainParams, ChainedSaddles};
pub use double_well::DoubleWell;
pub use pca::{CovarianceSpectrum, NonconvexPca};
pub use quadratic::{Quadratic, SymMatrix};
pub use standard::{Rastrigin, Rosenbrock};
pub use wrappers::{Noisy, Replicated};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{GoseError, Result};
use crate::linalg::{dist, norm, random_unit, sub};
use crate::oracle::Objective;
use crate::scalar::Scalar;

/// Region on which a problem's Lipschitz constants are claimed to hold.
#[derive(Debug, Clone, PartialEq)]
pub enum TestRegion<T> {
    Box { lo: Vec<T>, hi: Vec<T> },
    Ball { center: Vec<T>, radius: T },
}

impl<T: Scalar> TestRegion<T> {
    pub fn cube(d: usize, half_width: T) -> Self {
        TestRegion::Box {
            lo: vec![-half_width; d],
            hi: vec![half_width; d],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        match self {
            TestRegion::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(&l, &h)| l + (h - l) * T::lit(rng.random::<f64>()))
                .collect(),
            TestRegion::Ball { center, radius } => {
                let d = center.len();
                let u: Vec<T> = random_unit(d, rng);
                let r = *radius * T::lit(rng.random::<f64>().powf(1.0 / d as f64));
                center.iter().zip(&u).map(|(&c, &ui)| c + r * ui).collect()
            }
        }
    }

    pub fn contains(&self, x: &[T]) -> bool {
        match self {
            TestRegion::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&v, (&l, &h))| v >= l && v <= h),
            TestRegion::Ball { center, radius } => dist(x, center) <= *radius,
        }
    }
}

/// A registered test problem.
pub struct ProblemSpec<T: Scalar> {
    pub name: String,
    pub oracle: Box<dyn Objective<T> + Send + Sync>,
    pub known_l: T,
    /// Hessian-Lipschitz constant on the region; 0 for quadratics.
    pub known_rho: T,
    pub known_min: Option<T>,
    pub planted_saddles: Vec<Vec<T>>,
    pub x0s: Vec<Vec<T>>,
    pub region: TestRegion<T>,
}

impl<T: Scalar> std::fmt::Debug for ProblemSpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.oracle.dim())
            .field("known_l", &self.known_l)
            .field("known_rho", &self.known_rho)
            .field("known_min", &self.known_min)
            .field("planted_saddles", &self.planted_saddles.len())
            .finish()
    }
}

impl<T: Scalar> ProblemSpec<T> {
    pub fn dim(&self) -> usize {
        self.oracle.dim()
    }

    /// Replaces the oracle with its Gaussian-noise stochastic view.
    pub fn with_noise(self, sigma: f64, tau: f64) -> Self {
        Self {
            oracle: Box::new(Noisy::new(self.oracle, sigma, tau)),
            ..self
        }
    }

    /// Replaces the oracle with `n` identical finite-sum components.
    pub fn replicated(self, n: usize) -> Self {
        Self {
            oracle: Box::new(Replicated::new(self.oracle, n)),
            ..self
        }
    }
}

/// Largest observed ratios `|grad f(x) - grad f(y)| / |x - y|` and
/// `(|hess f(x) - hess f(y)|_2 - 1e-8) / |x - y|` over random pairs in the region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport {
    pub max_l_ratio: f64,
    pub max_rho_ratio: f64,
    pub pairs: usize,
}

impl LipschitzReport {
    /// Compares against the declared constants with a `1e-9` relative allowance for rounding.
    pub fn holds(&self, l: f64, rho: f64) -> bool {
        let slack = 1.0 + 1e-9;
        self.max_l_ratio <= l * slack && self.max_rho_ratio <= rho * slack
    }
}

/// Spot-checks the declared constants on `pairs` random pairs drawn from the region.
pub fn lipschitz_spot_check<T: Scalar, R: Rng + ?Sized>(
    spec: &ProblemSpec<T>,
    pairs: usize,
    rng: &mut R,
) -> Result<LipschitzReport> {
    let mut max_l = 0.0f64;
    let mut max_rho = 0.0f64;
    for _ in 0..pairs {
        let x = spec.region.sample(rng);
        let y = spec.region.sample(rng);
        let dxy = dist(&x, &y).as_f64();
        if dxy == 0.0 {
            continue;
        }
        let dg = norm(&sub(&spec.oracle.gradient(&x), &spec.oracle.gradient(&y))).as_f64();
        max_l = max_l.max(dg / dxy);
        let hx = dense_hessian(spec.oracle.as_ref(), &x)?;
        let hy = dense_hessian(spec.oracle.as_ref(), &y)?;
        let diff = hx - hy;
        let spectral = diff
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |m, e| m.max(e.abs()));
        max_rho = max_rho.max((spectral - 1e-8).max(0.0) / dxy);
    }
    Ok(LipschitzReport {
        max_l_ratio: max_l,
        max_rho_ratio: max_rho,
        pairs,
    })
}

/// `f(x) = x' Q diag(spectrum) Q' x / 2`. `seed = None` keeps `Q = I`.
pub fn make_quadratic_saddle<T: Scalar>(spectrum: &[f64], seed: Option<u64>) -> ProblemSpec<T> {
    let d = spectrum.len();
    let l = spectrum.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let has_negative = spectrum.iter().any(|&s| s < 0.0);
    ProblemSpec {
        name: "quadratic_saddle".into(),
        oracle: Box::new(Quadratic::new(SymMatrix::planted(spectrum, seed))),
        known_l: T::lit(l),
        known_rho: T::zero(),
        known_min: if has_negative { None } else { Some(T::zero()) },
        planted_saddles: if has_negative {
            vec![vec![T::zero(); d]]
        } else {
            vec![]
        },
        x0s: vec![vec![T::lit(1.0 / (d as f64).sqrt()); d]],
        region: TestRegion::Ball {
            center: vec![T::zero(); d],
            radius: T::lit(2.0),
        },
    }
}

/// Bounds for [`ChainParams::default`] in unscaled coordinates on `[-1.2, 1.2]^d`;
/// the registered constants apply the scale.
const CHAIN_UNIT_L: f64 = 32.0;
const CHAIN_UNIT_RHO: f64 = 80.0;
const CHAIN_HALF_WIDTH: f64 = 1.2;

/// Chain of `d` strict saddles ending in the minimum `(m, .., m)`.
/// Only the default parameters carry verified constants.
pub fn make_chained_saddles<T: Scalar>(d: usize) -> ProblemSpec<T> {
    let p = ChainParams::default();
    let f = ChainedSaddles::<T>::new(d, p);
    let saddles = (0..d).map(|k| f.stage_point(k)).collect();
    let mut x0 = vec![T::lit(0.5 * p.scale); d];
    x0[0] = T::zero();
    ProblemSpec {
        name: "chained_saddles".into(),
        known_l: T::lit(CHAIN_UNIT_L),
        known_rho: T::lit(CHAIN_UNIT_RHO / p.scale),
        known_min: Some(f.min_value()),
        planted_saddles: saddles,
        x0s: vec![x0],
        region: TestRegion::cube(d, T::lit(CHAIN_HALF_WIDTH * p.scale)),
        oracle: Box::new(f),
    }
}

/// Single saddle at the origin between two wells at `x_1 = +-9`.
pub fn make_double_well<T: Scalar>(d: usize) -> ProblemSpec<T> {
    let f = DoubleWell::<T>::new(d, 1.0 / 81.0, 1.0);
    let mut lo = vec![T::lit(-3.0); d];
    let mut hi = vec![T::lit(3.0); d];
    lo[0] = T::lit(-13.5);
    hi[0] = T::lit(13.5);
    let mut x0 = vec![T::one(); d];
    x0[0] = T::zero();
    ProblemSpec {
        name: "double_well".into(),
        known_l: T::lit(5.75),
        known_rho: T::one(),
        known_min: Some(f.min_value()),
        planted_saddles: vec![vec![T::zero(); d]],
        x0s: vec![x0],
        region: TestRegion::Box { lo, hi },
        oracle: Box::new(f),
    }
}

/// Radius of the ball on which the PCA constants are stated.
const PCA_RADIUS: f64 = 2.0;

/// Spiked-covariance nonconvex PCA with `n` components in dimension `d`.
pub fn make_nonconvex_pca<T: Scalar>(n: usize, d: usize, seed: u64) -> ProblemSpec<T> {
    let f = NonconvexPca::<T>::spiked(n, d, 2.0, 0.2, seed);
    let lambda = f.covariance_spectrum().eigenvalues[0];
    let r = PCA_RADIUS;
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed ^ 0x0dd);
    let x0: Vec<T> = (0..d)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            T::lit(0.05 * z)
        })
        .collect();
    ProblemSpec {
        name: "nonconvex_pca".into(),
        // Hessian -C + |x|^2 I + 2xx' has spectrum in [-lambda_1, 3R^2].
        known_l: T::lit(lambda.max(3.0 * r * r)),
        known_rho: T::lit(6.0 * r),
        known_min: Some(T::lit(f.min_value())),
        planted_saddles: vec![vec![T::zero(); d]],
        x0s: vec![x0],
        region: TestRegion::Ball {
            center: vec![T::zero(); d],
            radius: T::lit(r),
        },
        oracle: Box::new(f),
    }
}

/// Standard benchmark functions on `[-2, 2]^d`.
pub fn make_standard<T: Scalar>(name: &str, d: usize) -> Result<ProblemSpec<T>> {
    let tau = std::f64::consts::TAU;
    let (oracle, l, rho, x0): (Box<dyn Objective<T> + Send + Sync>, f64, f64, f64) = match name {
        // row sums of |hessian| bounded at |x| <= 2; third derivatives 2400 x and 400
        "rosenbrock" => (Box::new(Rosenbrock { d }), 7402.0, 5600.0, -1.2),
        "rastrigin" => (
            Box::new(Rastrigin { d }),
            2.0 + 10.0 * tau * tau,
            10.0 * tau * tau * tau,
            0.4,
        ),
        other => return Err(GoseError::UnknownProblem(other.to_string())),
    };
    let mut start = vec![T::lit(x0); d];
    if name == "rosenbrock" && d >= 2 {
        start[1] = T::one();
    }
    Ok(ProblemSpec {
        name: name.to_string(),
        oracle,
        known_l: T::lit(l),
        known_rho: T::lit(rho),
        known_min: Some(T::zero()),
        planted_saddles: vec![],
        x0s: vec![start],
        region: TestRegion::cube(d, T::lit(2.0)),
    })
}

/// Parameters accepted by [`build_problem`]; unused fields are ignored per problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemParams {
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    /// Explicit spectrum for `quadratic_saddle`; defaults to `(-1, 1, .., 1)`.
    pub spectrum: Option<Vec<f64>>,
    /// Gaussian gradient-noise level; turns the oracle stochastic when set.
    pub sigma: Option<f64>,
    /// Bound on the sample-Hessian noise.
    pub tau: f64,
    /// Wrap as `replicas` identical finite-sum components.
    pub replicas: Option<usize>,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            d: 2,
            n: 200,
            seed: 0,
            spectrum: None,
            sigma: None,
            tau: 0.0,
            replicas: None,
        }
    }
}

/// Names understood by [`build_problem`].
pub const PROBLEM_NAMES: [&str; 6] = [
    "quadratic_saddle",
    "chained_saddles",
    "double_well",
    "nonconvex_pca",
    "rosenbrock",
    "rastrigin",
];

pub fn build_problem<T: Scalar>(name: &str, p: &ProblemParams) -> Result<ProblemSpec<T>> {
    let spec = match name {
        "quadratic_saddle" => {
            let spectrum = p.spectrum.clone().unwrap_or_else(|| {
                let mut s = vec![1.0; p.d];
                s[0] = -1.0;
                s
            });
            make_quadratic_saddle(&spectrum, (p.seed != 0).then_some(p.seed))
        }
        "chained_saddles" => {
            if p.d < 2 {
                return Err(GoseError::DimensionMismatch {
                    expected: 2,
                    got: p.d,
                });
            }
            make_chained_saddles(p.d)
        }
        "double_well" => make_double_well(p.d.max(1)),
        "nonconvex_pca" => make_nonconvex_pca(p.n.max(1), p.d.max(2), p.seed),
        other => make_standard(other, p.d.max(2))?,
    };
    let spec = match p.replicas {
        Some(n) => spec.replicated(n.max(1)),
        None => spec,
    };
    Ok(match p.sigma {
        Some(s) => spec.with_noise(s, p.tau),
        None => spec,
    })
}
