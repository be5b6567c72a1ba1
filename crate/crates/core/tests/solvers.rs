mod common;

use std::cell::RefCell;

use common::*;
use gose::problems::{make_standard, Replicated, Rosenbrock};
use gose::solvers::{
    derive_scsg_params, gd_to_stationarity, guarded_agd, sample_geometric, scsg_epoch,
    scsg_epoch_fixed, ScsgMults, ScsgSource,
};
use gose::{
    make_quadratic_saddle, validate_config, Capabilities, Evaluator, GoseError, Mode, Objective,
    SmoothnessSpecF64, ToleranceConfigF64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn geometric_mean_matches_batch_ratio() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = 100.0 / 101.0;
    let n = 100_000;
    let mean = (0..n)
        .map(|_| sample_geometric(p, &mut rng).unwrap() as f64)
        .sum::<f64>()
        / n as f64;
    assert!((95.0..=105.0).contains(&mean), "mean {mean}");
}

#[test]
fn geometric_tiny_p_is_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    assert!((0..1000).all(|_| sample_geometric(1e-9, &mut rng).unwrap() == 0));
}

#[test]
fn geometric_pmf_chi_square() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 100_000usize;
    let bins = 10;
    let mut counts = vec![0usize; bins + 1];
    for _ in 0..n {
        let k = sample_geometric(0.5, &mut rng).unwrap() as usize;
        counts[k.min(bins)] += 1;
    }
    assert!((counts[0] as f64 / n as f64 - 0.5).abs() < 0.01);
    assert!((counts[1] as f64 / n as f64 - 0.25).abs() < 0.01);
    let mut chi2 = 0.0;
    for (k, &c) in counts.iter().enumerate() {
        let prob = if k < bins {
            0.5f64.powi(k as i32 + 1)
        } else {
            0.5f64.powi(bins as i32)
        };
        let expected = prob * n as f64;
        chi2 += (c as f64 - expected).powi(2) / expected;
    }
    // 10 degrees of freedom, upper 1% point
    assert!(chi2 < 23.209, "chi2 {chi2}");
}

#[test]
fn geometric_rejects_bad_p() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    assert!(matches!(
        sample_geometric(1.0, &mut rng),
        Err(GoseError::InvalidP(_))
    ));
}

fn tol(eps: f64, eps_h: f64, delta: f64) -> ToleranceConfigF64 {
    ToleranceConfigF64 {
        eps,
        eps_h,
        delta,
        ..Default::default()
    }
}

#[test]
fn finite_sum_scsg_rules() {
    let cfg = config(0.01, 0.5, 4.0, 1.0, Mode::FiniteSum);
    let s = derive_scsg_params(&cfg, 1000, &ScsgMults::default(), None).unwrap();
    assert_eq!((s.batch, s.minibatch), (1000, 1));
    assert!((s.eta - 1.0 / 400.0).abs() < 1e-15);
    assert!(!s.degenerate);
}

#[test]
fn stochastic_batch_example() {
    let smooth = SmoothnessSpecF64 {
        l: 1.0,
        rho: 0.1,
        h_star: Some(1.0),
        ..Default::default()
    };
    let cfg = validate_config(&tol(0.1, 0.9, 0.1), &smooth, Mode::Stochastic).unwrap();
    let s = derive_scsg_params(&cfg, 0, &ScsgMults::default(), None).unwrap();
    assert_eq!(s.batch, 22105);
    assert!(s.minibatch >= 1 && s.minibatch <= s.batch);
    let expected_eta =
        (s.minibatch as f64).powf(2.0 / 3.0) / (6.0 * (s.batch as f64).powf(2.0 / 3.0));
    assert!((s.eta - expected_eta).abs() < 1e-15);
}

#[test]
fn stochastic_degenerates_when_curvature_tolerance_is_tight() {
    // eps_h = eps^{2/3}; the minibatch rule then exceeds B once rho^2 dominates L.
    let smooth = SmoothnessSpecF64 {
        l: 1e-7,
        rho: 0.002,
        h_star: Some(1.0),
        ..Default::default()
    };
    let cfg = validate_config(&tol(1e-3, 0.01, 0.01), &smooth, Mode::Stochastic).unwrap();
    let s = derive_scsg_params(&cfg, 0, &ScsgMults::default(), None).unwrap();
    assert!(s.degenerate);
    assert_eq!(s.minibatch, s.batch);
}

#[test]
fn stochastic_needs_variance_bound() {
    let cfg = config(0.01, 0.5, 1.0, 1.0, Mode::Stochastic);
    let err = derive_scsg_params(&cfg, 0, &ScsgMults::default(), None);
    assert!(matches!(err, Err(GoseError::MissingVarianceBound)));
    let ok = derive_scsg_params(&cfg, 0, &ScsgMults::default(), Some(0.5)).unwrap();
    assert!(ok.batch > 0);
}

#[test]
fn empty_epoch_returns_anchor() {
    let p = make_quadratic_saddle::<f64>(&[1.0, -1.0], None).replicated(3);
    let cfg = config(0.01, 0.5, 1.0, 1.0, Mode::FiniteSum);
    let s = derive_scsg_params(&cfg, 3, &ScsgMults::default(), None).unwrap();
    let mut eval = Evaluator::new(p.oracle.as_ref());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x0 = [0.3, -0.7];
    let g = eval.full_gradient(&x0);
    let before = *eval.counters();
    let out = scsg_epoch_fixed(&mut eval, &x0, &g, &s, ScsgSource::FiniteSum, 0, &mut rng).unwrap();
    assert_eq!(out.point, x0.to_vec());
    assert_eq!(*eval.counters(), before);
}

#[test]
fn single_component_epoch_is_gradient_descent() {
    let oracle = Replicated::new(Rosenbrock { d: 3 }, 1);
    let spec = make_standard::<f64>("rosenbrock", 3).unwrap();
    let cfg = config(0.01, 0.5, spec.known_l, 1.0, Mode::FiniteSum);
    let s = derive_scsg_params(&cfg, 1, &ScsgMults::default(), None).unwrap();
    assert_eq!((s.batch, s.minibatch), (1, 1));
    let x0 = vec![-1.2, 1.0, 0.5];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut eval = Evaluator::new(&oracle);
    let g0 = eval.full_gradient(&x0);
    let mut gd = x0.clone();
    for steps in 1..=25u64 {
        let g = oracle.gradient(&gd);
        for (xi, gi) in gd.iter_mut().zip(&g) {
            *xi -= s.eta * gi;
        }
        let out = scsg_epoch_fixed(
            &mut eval,
            &x0,
            &g0,
            &s,
            ScsgSource::FiniteSum,
            steps,
            &mut rng,
        )
        .unwrap();
        let dev = out
            .point
            .iter()
            .zip(&gd)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dev <= 1e-12, "step {steps}: {dev}");
    }
}

#[test]
fn epoch_charges_two_gradients_per_sample() {
    let p = make_quadratic_saddle::<f64>(&[1.0, 2.0], None).replicated(4);
    let cfg = config(0.01, 0.5, 2.0, 1.0, Mode::FiniteSum);
    let s = derive_scsg_params(&cfg, 4, &ScsgMults::default(), None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let mut eval = Evaluator::new(p.oracle.as_ref());
        let x0 = [1.0, 1.0];
        let g = p.oracle.gradient(&x0);
        let out = scsg_epoch(&mut eval, &x0, &g, &s, ScsgSource::FiniteSum, &mut rng).unwrap();
        assert_eq!(
            eval.counters().component_grad_evals,
            2 * s.minibatch as u64 * out.steps
        );
    }
}

/// `f(x) = (1/n) sum_i 0.5 (x - c_i)' D_i (x - c_i)` with diagonal `D_i`.
struct ShiftedQuadratics {
    centers: Vec<Vec<f64>>,
    diags: Vec<Vec<f64>>,
}

impl ShiftedQuadratics {
    fn new(n: usize, d: usize, rng: &mut impl Rng) -> Self {
        Self {
            centers: (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect(),
            diags: (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(0.5..2.0)).collect())
                .collect(),
        }
    }
}

impl Objective<f64> for ShiftedQuadratics {
    fn dim(&self) -> usize {
        self.centers[0].len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let n = self.centers.len() as f64;
        self.centers
            .iter()
            .zip(&self.diags)
            .map(|(c, dg)| {
                x.iter()
                    .zip(c)
                    .zip(dg)
                    .map(|((xi, ci), di)| 0.5 * di * (xi - ci).powi(2))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / n
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.centers.len() as f64;
        let mut g = vec![0.0; x.len()];
        for i in 0..self.centers.len() {
            for (gj, cj) in g.iter_mut().zip(self.component_gradient(i, x)) {
                *gj += cj / n;
            }
        }
        g
    }
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            deterministic: true,
            finite_sum: true,
            ..Default::default()
        }
    }
    fn n_components(&self) -> usize {
        self.centers.len()
    }
    fn component_gradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.centers[i])
            .zip(&self.diags[i])
            .map(|((xi, ci), di)| di * (xi - ci))
            .collect()
    }
}

#[test]
fn finite_sum_epochs_descend_on_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f = ShiftedQuadratics::new(50, 5, &mut rng);
    let cfg = config(0.01, 0.5, 2.0, 1.0, Mode::FiniteSum);
    let s = derive_scsg_params(&cfg, 50, &ScsgMults::default(), None).unwrap();
    let x0 = vec![3.0, -2.0, 1.0, 0.0, 2.5];
    let f0 = f.value(&x0);
    let g0 = f.gradient(&x0);
    let mut total = 0.0;
    for seed in 0..100u64 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut eval = Evaluator::new(&f);
        let out = scsg_epoch(&mut eval, &x0, &g0, &s, ScsgSource::FiniteSum, &mut r).unwrap();
        total += f.value(&out.point);
    }
    assert!(total / 100.0 < f0);
}

#[test]
fn gd_one_step_on_isotropic_quadratic() {
    let p = make_quadratic_saddle::<f64>(&[1.0, 1.0], None);
    let mut eval = Evaluator::new(p.oracle.as_ref());
    let out = gd_to_stationarity(&mut eval, &[1.0, 0.0], 1.0, 1e-8, 100, None);
    assert_eq!(out.iters, 1);
    assert_eq!(out.grad_norm, 0.0);
    assert!(!out.exhausted);
}

/// Records the points at which gradients were requested.
struct Recording<O> {
    inner: O,
    points: RefCell<Vec<Vec<f64>>>,
}

impl<O: Objective<f64>> Objective<f64> for Recording<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.points.borrow_mut().push(x.to_vec());
        self.inner.gradient(x)
    }
    fn capabilities(&self) -> Capabilities {
        self.inner.capabilities()
    }
}

#[test]
fn gd_on_rosenbrock_is_monotone() {
    let spec = make_standard::<f64>("rosenbrock", 2).unwrap();
    let rec = Recording {
        inner: Rosenbrock { d: 2 },
        points: RefCell::new(vec![]),
    };
    let mut eval = Evaluator::new(&rec);
    let out = gd_to_stationarity(&mut eval, &[-1.2, 1.0], spec.known_l, 1e-3, 2_000_000, None);
    assert!(!out.exhausted, "grad {}", out.grad_norm);
    assert!(out.grad_norm <= 1e-3);
    let values: Vec<f64> = rec
        .points
        .borrow()
        .iter()
        .map(|x| rec.inner.value(x))
        .collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0]));
}

struct Linear;

impl Objective<f64> for Linear {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &[f64]) -> f64 {
        x[0] - 2.0 * x[1]
    }
    fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        vec![1.0, -2.0]
    }
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            deterministic: true,
            ..Default::default()
        }
    }
}

#[test]
fn linear_objective_exhausts_both_solvers() {
    let mut eval = Evaluator::new(&Linear);
    let out = gd_to_stationarity(&mut eval, &[0.0, 0.0], 1.0, 1e-3, 100, None);
    assert!(out.exhausted);
    assert_eq!(out.iters, 100);
    let out = guarded_agd(&mut eval, &[0.0, 0.0], 1.0, 1.0, 1e-3, 100, None);
    assert!(out.exhausted);
}

#[test]
fn agd_beats_gd_on_ill_conditioned_quadratic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut spectrum = planted_spectrum(10, 1.0, 1.0, 100.0, &mut rng);
    spectrum[1] = 100.0;
    let p = make_quadratic_saddle::<f64>(&spectrum, Some(3));
    let x0 = vec![1.0; 10];
    let mut e_gd = Evaluator::new(p.oracle.as_ref());
    let gd = gd_to_stationarity(&mut e_gd, &x0, 100.0, 1e-6, 1_000_000, None);
    let mut e_agd = Evaluator::new(p.oracle.as_ref());
    let agd = guarded_agd(&mut e_agd, &x0, 100.0, 1e-3, 1e-6, 1_000_000, None);
    assert!(!gd.exhausted && !agd.exhausted);
    assert!(
        e_agd.counters().grad_evals < e_gd.counters().grad_evals,
        "agd {} gd {}",
        e_agd.counters().grad_evals,
        e_gd.counters().grad_evals
    );
}

#[test]
fn agd_contract_on_nonconvex_suite() {
    for name in ["rosenbrock", "rastrigin"] {
        for d in [2usize, 5] {
            let p = make_standard::<f64>(name, d).unwrap();
            let x0 = &p.x0s[0];
            let mut eval = Evaluator::new(p.oracle.as_ref());
            let out = guarded_agd(&mut eval, x0, p.known_l, p.known_rho, 1e-4, 200_000, None);
            assert!(out.grad_norm <= 1e-4 || out.exhausted);
            assert!(p.oracle.value(&out.point) <= p.oracle.value(x0));
            let g = p.oracle.gradient(&out.point);
            assert!((norm(&g) - out.grad_norm).abs() <= 1e-12 * (1.0 + out.grad_norm));
        }
    }
    let p = gose::problems::make_chained_saddles::<f64>(4);
    let mut eval = Evaluator::new(p.oracle.as_ref());
    let out = guarded_agd(
        &mut eval,
        &p.x0s[0],
        p.known_l,
        p.known_rho,
        1e-2,
        200_000,
        None,
    );
    assert!(out.grad_norm <= 1e-2 && p.oracle.value(&out.point) <= p.oracle.value(&p.x0s[0]));
}

#[test]
fn both_solvers_converge_on_convex_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for seed in 0..10u64 {
        let spectrum = planted_spectrum(8, 0.5, 0.5, 4.0, &mut rng);
        let p = make_quadratic_saddle::<f64>(&spectrum, Some(seed + 1));
        let x0: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
        let f0 = p.oracle.value(&x0);
        let eps = 1e-4;
        // 10 L (f(x0) - f*) / eps^2
        let budget = (10.0 * 4.0 * f0 / (eps * eps)) as usize;
        let mut e1 = Evaluator::new(p.oracle.as_ref());
        assert!(!gd_to_stationarity(&mut e1, &x0, 4.0, eps, budget, None).exhausted);
        let mut e2 = Evaluator::new(p.oracle.as_ref());
        assert!(!guarded_agd(&mut e2, &x0, 4.0, 1e-3, eps, budget, None).exhausted);
    }
}
