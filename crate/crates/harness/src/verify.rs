//! Statistical check of the negative-curvature finders on planted quadratics.
//!
//! Each trial builds `x' A x / 2` with `A = Q diag(spectrum) Q'` for a random orthogonal
//! `Q`. Negative trials plant `lambda_min = -2 eps_h` with the rest of the spectrum uniform
//! on `[0, 2]`; PSD trials draw the whole spectrum from `[0, 2]`. A finder passes when it
//! returns directions on enough negative trials and `Bottom` on enough PSD ones.

use std::fmt;

use gose::ncfind::{approx_nc_deterministic, approx_nc_finite_sum, approx_nc_stochastic};
use gose::{
    make_quadratic_saddle, Capabilities, Evaluator, NcConfig, NcTarget, Objective, SampleKey,
    StochasticEngine,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Gradient-noise level of the stochastic trials.
pub const STOCHASTIC_SIGMA: f64 = 0.05;
/// Hessian-noise level of the stochastic trials.
pub const STOCHASTIC_TAU: f64 = 0.2;
/// Components of the finite-sum trials.
pub const FINITE_SUM_N: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyEngine {
    Deterministic,
    Oja,
    MinibatchLanczos,
    FiniteSum,
}

impl VerifyEngine {
    /// Required (direction rate on negative trials, `Bottom` rate on PSD trials).
    pub fn thresholds(self) -> (f64, f64) {
        match self {
            Self::Deterministic | Self::FiniteSum => (0.95, 1.0),
            Self::Oja | Self::MinibatchLanczos => (0.90, 0.90),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub d: usize,
    pub trials: usize,
    pub eps_h: f64,
    pub delta: f64,
    pub engine: VerifyEngine,
    pub seed: u64,
    /// Adds an antisymmetric part to every Hessian-vector product.
    pub inject_asymmetric: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            d: 50,
            trials: 200,
            eps_h: 0.5,
            delta: 0.01,
            engine: VerifyEngine::Deterministic,
            seed: 0,
            inject_asymmetric: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub suite: &'static str,
    pub trials: usize,
    pub directions: usize,
    pub bottoms: usize,
    /// Fraction of trials with the expected outcome.
    pub rate: f64,
    pub threshold: f64,
    /// Directions whose exact Rayleigh quotient exceeded `-eps_h / 2`.
    pub unsound: usize,
    pub mean_cost: f64,
    pub passed: bool,
}

impl fmt::Display for SuiteRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<9} {:>6} {:>10} {:>7} {:>7.3} {:>9.2} {:>7} {:>9.1} {}",
            self.suite,
            self.trials,
            self.directions,
            self.bottoms,
            self.rate,
            self.threshold,
            self.unsound,
            self.mean_cost,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

pub const TABLE_HEADER: &str =
    "suite     trials directions bottoms    rate threshold unsound mean_cost result";

/// Exposes `A + s (e1 e2' - e2 e1')` through the Hessian-vector products of `inner`.
struct Skewed<O> {
    inner: O,
    skew: f64,
}

impl<O: Objective<f64>> Skewed<O> {
    fn skew(&self, mut hv: Vec<f64>, v: &[f64]) -> Vec<f64> {
        hv[0] += self.skew * v[1];
        hv[1] -= self.skew * v[0];
        hv
    }
}

impl<O: Objective<f64>> Objective<f64> for Skewed<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.inner.gradient(x)
    }
    fn capabilities(&self) -> Capabilities {
        self.inner.capabilities()
    }
    fn hvp(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        self.skew(self.inner.hvp(x, v), v)
    }
    fn n_components(&self) -> usize {
        self.inner.n_components()
    }
    fn component_gradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
        self.inner.component_gradient(i, x)
    }
    fn component_hvp(&self, i: usize, x: &[f64], v: &[f64]) -> Vec<f64> {
        self.skew(self.inner.component_hvp(i, x, v), v)
    }
    fn sample_gradient(&self, x: &[f64], key: SampleKey) -> Vec<f64> {
        self.inner.sample_gradient(x, key)
    }
    fn sample_hvp(&self, x: &[f64], v: &[f64], key: SampleKey) -> Vec<f64> {
        self.skew(self.inner.sample_hvp(x, v, key), v)
    }
}

struct Trial {
    direction: Option<Vec<f64>>,
    cost: u64,
}

fn run_trial(
    opts: &VerifyOptions,
    spectrum: &[f64],
    basis_seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Trial> {
    let d = opts.d;
    let mut problem = make_quadratic_saddle::<f64>(spectrum, Some(basis_seed));
    problem = match opts.engine {
        VerifyEngine::Deterministic => problem,
        VerifyEngine::FiniteSum => problem.replicated(FINITE_SUM_N),
        VerifyEngine::Oja | VerifyEngine::MinibatchLanczos => {
            problem.with_noise(STOCHASTIC_SIGMA, STOCHASTIC_TAU)
        }
    };
    let oracle: Box<dyn Objective<f64>> = if opts.inject_asymmetric {
        Box::new(Skewed {
            inner: problem.oracle,
            skew: 1.0,
        })
    } else {
        problem.oracle
    };
    let target = NcTarget {
        eps_h: opts.eps_h,
        delta: opts.delta,
        l: spectrum
            .iter()
            .fold(2.0 * opts.eps_h, |m, s| m.max(s.abs())),
    };
    let cfg = NcConfig {
        engine: match opts.engine {
            VerifyEngine::MinibatchLanczos => StochasticEngine::MinibatchLanczos,
            _ => StochasticEngine::Oja,
        },
        ..NcConfig::default()
    };
    let x = vec![0.0; d];
    let mut eval = Evaluator::new(oracle.as_ref());
    let out = match opts.engine {
        VerifyEngine::Deterministic => approx_nc_deterministic(&mut eval, &x, &target, &cfg, rng),
        VerifyEngine::FiniteSum => approx_nc_finite_sum(&mut eval, &x, &target, &cfg, rng),
        _ => approx_nc_stochastic(&mut eval, &x, &target, &cfg, rng),
    }?;
    Ok(Trial {
        direction: out.direction().map(<[f64]>::to_vec),
        cost: out.cost,
    })
}

fn exact_rayleigh(spectrum: &[f64], basis_seed: u64, v: &[f64]) -> f64 {
    let q = make_quadratic_saddle::<f64>(spectrum, Some(basis_seed));
    let hv = q.oracle.hvp(&vec![0.0; v.len()], v);
    let num: f64 = v.iter().zip(&hv).map(|(a, b)| a * b).sum();
    num / v.iter().map(|a| a * a).sum::<f64>()
}

/// Runs the negative and PSD suites and returns one row per suite.
pub fn verify_nc(opts: &VerifyOptions) -> Result<Vec<SuiteRow>> {
    if opts.d < 2 || opts.trials == 0 {
        return Err(HarnessError::Config(
            "verify-nc needs d >= 2 and at least one trial".into(),
        ));
    }
    let in_range = opts.eps_h > 0.0 && opts.delta > 0.0 && opts.delta < 1.0;
    if !in_range {
        return Err(HarnessError::Config(
            "verify-nc needs eps_h > 0 and delta in (0, 1)".into(),
        ));
    }
    if opts.inject_asymmetric && opts.engine == VerifyEngine::Oja {
        return Err(HarnessError::Config(
            "the Oja engine never probes symmetry; inject with a Lanczos-based engine".into(),
        ));
    }
    let (dir_threshold, bottom_threshold) = opts.engine.thresholds();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rows = Vec::with_capacity(2);
    for (suite, negative) in [("negative", true), ("psd", false)] {
        let (mut directions, mut unsound, mut cost) = (0, 0, 0u64);
        for t in 0..opts.trials {
            let mut spectrum: Vec<f64> = (0..opts.d).map(|_| rng.random_range(0.0..2.0)).collect();
            if negative {
                spectrum[0] = -2.0 * opts.eps_h;
            }
            let basis_seed = opts.seed.wrapping_mul(1_000_003).wrapping_add(t as u64 + 1);
            let trial = run_trial(opts, &spectrum, basis_seed, &mut rng)?;
            cost += trial.cost;
            if let Some(v) = trial.direction {
                directions += 1;
                if exact_rayleigh(&spectrum, basis_seed, &v) > -opts.eps_h / 2.0 + 1e-9 {
                    unsound += 1;
                }
            }
        }
        let bottoms = opts.trials - directions;
        let (hits, threshold) = if negative {
            (directions, dir_threshold)
        } else {
            (bottoms, bottom_threshold)
        };
        let rate = hits as f64 / opts.trials as f64;
        rows.push(SuiteRow {
            suite,
            trials: opts.trials,
            directions,
            bottoms,
            rate,
            threshold,
            unsound,
            mean_cost: cost as f64 / opts.trials as f64,
            passed: rate >= threshold && unsound == 0,
        });
    }
    Ok(rows)
}

pub fn all_passed(rows: &[SuiteRow]) -> bool {
    rows.iter().all(|r| r.passed)
}
