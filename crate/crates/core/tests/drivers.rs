mod common;

use common::*;
use gose::drivers::derive_seed;
use gose::problems::{make_chained_saddles, make_double_well, make_nonconvex_pca};
use gose::{
    always_probe_baseline, amplify, certify_second_order, gose_deterministic, gose_finite_sum,
    gose_stochastic, make_quadratic_saddle, Branch, Capabilities, GoseOptions, Mode, Objective,
    RunReport, SampleKey, SolverChoice, Status, ValidatedConfigF64,
};

fn with_seed(mut cfg: ValidatedConfigF64, seed: u64) -> ValidatedConfigF64 {
    cfg.tol.seed = seed;
    cfg
}

fn assert_report(r: &RunReport<f64>) {
    r.check_invariants().unwrap();
    if r.config.mode == Mode::Deterministic {
        assert!(r.trace.windows(2).all(|w| w[1].f <= w[0].f + 1e-12));
    }
}

#[test]
fn convex_start_at_minimum_probes_once() {
    let p = make_quadratic_saddle::<f64>(&[1.0, 3.0], Some(2));
    let cfg = config(0.01, 0.5, 3.0, 1.0, Mode::Deterministic);
    let r = gose_deterministic(
        p.oracle.as_ref(),
        &[0.0, 0.0],
        &cfg,
        &GoseOptions::default(),
    )
    .unwrap();
    assert_eq!(r.certificate.status, Status::SecondOrderStationary);
    assert_eq!(r.certificate.point, vec![0.0, 0.0]);
    assert_eq!(r.certificate.counters.nc_calls, 1);
    assert_eq!(r.certificate.counters.escape_steps, 0);
    assert_report(&r);
}

#[test]
fn chained_saddles_respect_probe_bound() {
    let d = 10;
    let p = make_chained_saddles::<f64>(d);
    for seed in 0..5 {
        let cfg = with_seed(
            config(0.01, 0.5, p.known_l, p.known_rho, Mode::Deterministic),
            seed,
        );
        let r = gose_deterministic(p.oracle.as_ref(), &p.x0s[0], &cfg, &GoseOptions::default())
            .unwrap();
        assert_report(&r);
        assert_eq!(r.certificate.status, Status::SecondOrderStationary);
        assert!(r.certificate.counters.nc_calls <= d as u64 + 1);
        assert!(
            certify_second_order(p.oracle.as_ref(), &r.certificate.point, 0.01, 0.5)
                .unwrap()
                .passed
        );
    }
}

#[test]
fn double_well_trace_has_single_escape() {
    let p = make_double_well::<f64>(4);
    let cfg = config(0.01, 0.5, p.known_l, p.known_rho, Mode::Deterministic);
    let r =
        gose_deterministic(p.oracle.as_ref(), &p.x0s[0], &cfg, &GoseOptions::default()).unwrap();
    assert_report(&r);
    let escapes: Vec<usize> = r
        .trace
        .iter()
        .enumerate()
        .filter(|(_, t)| t.escaped)
        .map(|(i, _)| i)
        .collect();
    assert_eq!(escapes.len(), 1);
    assert_eq!(r.trace[escapes[0] + 1].branch, Branch::LargeGradient);
    assert!((p.oracle.value(&r.certificate.point) - p.known_min.unwrap()).abs() < 1e-3);
}

#[test]
fn agd_solver_also_certifies() {
    let p = make_double_well::<f64>(3);
    let cfg = config(0.01, 0.5, p.known_l, p.known_rho, Mode::Deterministic);
    let opts = GoseOptions {
        solver: SolverChoice::Agd,
        ..Default::default()
    };
    let r = gose_deterministic(p.oracle.as_ref(), &p.x0s[0], &cfg, &opts).unwrap();
    assert_report(&r);
    assert!(
        certify_second_order(p.oracle.as_ref(), &r.certificate.point, 0.01, 0.5)
            .unwrap()
            .passed
    );
}

#[test]
fn stochastic_zero_variance_at_minimum_returns_start() {
    let p = make_quadratic_saddle::<f64>(&[1.0, 2.0], Some(3)).with_noise(0.0, 0.0);
    let cfg = config(0.01, 0.5, 2.0, 1.0, Mode::Stochastic);
    let r = gose_stochastic(
        p.oracle.as_ref(),
        &[0.0, 0.0],
        &cfg,
        &GoseOptions::default(),
    )
    .unwrap();
    assert_report(&r);
    assert_eq!(r.trace[0].branch, Branch::SmallGradient);
    assert_eq!(r.certificate.point, vec![0.0, 0.0]);
    assert_eq!(r.certificate.status, Status::SecondOrderStationary);
}

#[test]
fn stochastic_pca_accounting() {
    let p = make_nonconvex_pca::<f64>(50, 6, 2).with_noise(0.002, 0.0);
    let cfg = config_with(1e-3, 0.5, p.known_l, p.known_rho, Mode::Stochastic, |s| {
        s.sigma = Some(0.002)
    });
    for seed in 0..3 {
        let r = gose_stochastic(
            p.oracle.as_ref(),
            &p.x0s[0],
            &with_seed(cfg, seed),
            &GoseOptions::default(),
        )
        .unwrap();
        assert_report(&r);
        let c = r.certificate.counters;
        assert_eq!(c.outer_iters, c.epochs_run + c.small_region_entries);
    }
}

#[test]
fn finite_sum_single_component_convex() {
    let p = make_quadratic_saddle::<f64>(&[1.0, 2.0], Some(4)).replicated(1);
    let cfg = config(0.01, 0.5, 2.0, 1.0, Mode::FiniteSum);
    let r = gose_finite_sum(
        p.oracle.as_ref(),
        &[1.0, -1.0],
        &cfg,
        &GoseOptions::default(),
    )
    .unwrap();
    assert_report(&r);
    assert_eq!(r.certificate.counters.nc_calls, 1);
    assert!(r.certificate.grad_norm <= 0.01);
}

#[test]
fn finite_sum_pca_reaches_global_minimum() {
    let p = make_nonconvex_pca::<f64>(200, 20, 11);
    let fmin = p.known_min.unwrap();
    let mut ok = 0;
    for seed in 0..10 {
        let cfg = with_seed(
            config(1e-3, 0.5, p.known_l, p.known_rho, Mode::FiniteSum),
            seed,
        );
        let r =
            gose_finite_sum(p.oracle.as_ref(), &p.x0s[0], &cfg, &GoseOptions::default()).unwrap();
        assert_report(&r);
        let cert =
            certify_second_order(p.oracle.as_ref(), &r.certificate.point, 1e-3, 0.5).unwrap();
        if cert.passed && (p.oracle.value(&r.certificate.point) - fmin).abs() <= 1e-3 {
            ok += 1;
        }
    }
    assert!(ok >= 4, "{ok}/10");
}

#[test]
fn one_outer_iteration_exhausts_budget() {
    let p = make_double_well::<f64>(2);
    let mut cfg = config(0.01, 0.5, p.known_l, p.known_rho, Mode::Deterministic);
    cfg.tol.max_outer = 1;
    let x0 = [5.0, 2.0];
    let det = gose_deterministic(p.oracle.as_ref(), &x0, &cfg, &GoseOptions::default()).unwrap();
    let fs_oracle = make_double_well::<f64>(2).replicated(3);
    let fs = gose_finite_sum(
        fs_oracle.oracle.as_ref(),
        &x0,
        &cfg,
        &GoseOptions::default(),
    )
    .unwrap();
    let st_oracle = make_double_well::<f64>(2).with_noise(0.01, 0.0);
    let st = gose_stochastic(
        st_oracle.oracle.as_ref(),
        &x0,
        &cfg,
        &GoseOptions::default(),
    )
    .unwrap();
    for r in [&det, &fs, &st] {
        // the deterministic solver may finish its inner run, but status still reflects the cap
        assert_report(r);
        assert_eq!(r.certificate.counters.nc_calls, 0);
        assert_eq!(r.trace.len(), 1);
    }
    assert_eq!(fs.certificate.status, Status::BudgetExhausted);
    assert_eq!(st.certificate.status, Status::BudgetExhausted);
    assert_eq!(det.certificate.status, Status::BudgetExhausted);
}

/// Linear function with `|grad f| = scale * eps` everywhere, usable in every mode.
struct Probe {
    slope: f64,
}

impl Objective<f64> for Probe {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.slope * x[0]
    }
    fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        vec![self.slope, 0.0]
    }
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            deterministic: true,
            finite_sum: true,
            stochastic: true,
            analytic_hvp: true,
        }
    }
    fn hvp(&self, _x: &[f64], _v: &[f64]) -> Vec<f64> {
        vec![0.0, 0.0]
    }
    fn n_components(&self) -> usize {
        2
    }
    fn component_gradient(&self, _i: usize, x: &[f64]) -> Vec<f64> {
        self.gradient(x)
    }
    fn component_hvp(&self, _i: usize, x: &[f64], v: &[f64]) -> Vec<f64> {
        self.hvp(x, v)
    }
    fn sample_gradient(&self, x: &[f64], _key: SampleKey) -> Vec<f64> {
        self.gradient(x)
    }
    fn sample_hvp(&self, x: &[f64], v: &[f64], _key: SampleKey) -> Vec<f64> {
        self.hvp(x, v)
    }
}

#[test]
fn branch_thresholds_per_driver() {
    let eps = 0.01;
    let mut cfg = config(eps, 0.5, 1.0, 1.0, Mode::Deterministic);
    cfg.tol.max_outer = 2;
    let opts = GoseOptions {
        solver_max_iters: 3,
        ..Default::default()
    };
    let between = Probe { slope: 0.75 * eps };
    let det = gose_deterministic(&between, &[0.0, 0.0], &cfg, &opts).unwrap();
    let fs = gose_finite_sum(&between, &[0.0, 0.0], &cfg, &opts).unwrap();
    let st = gose_stochastic(&between, &[0.0, 0.0], &cfg, &opts).unwrap();
    assert_eq!(det.trace[0].branch, Branch::SmallGradient);
    assert_eq!(fs.trace[0].branch, Branch::SmallGradient);
    assert_eq!(st.trace[0].branch, Branch::LargeGradient);

    let below_half = Probe { slope: 0.4 * eps };
    let st = gose_stochastic(&below_half, &[0.0, 0.0], &cfg, &opts).unwrap();
    assert_eq!(st.trace[0].branch, Branch::SmallGradient);

    let above = Probe { slope: 1.25 * eps };
    let det = gose_deterministic(&above, &[0.0, 0.0], &cfg, &opts).unwrap();
    let fs = gose_finite_sum(&above, &[0.0, 0.0], &cfg, &opts).unwrap();
    assert_eq!(det.trace[0].branch, Branch::LargeGradient);
    assert_eq!(fs.trace[0].branch, Branch::LargeGradient);
    assert_eq!(det.certificate.status, Status::BudgetExhausted);
}

#[test]
fn amplify_with_one_rep_is_identity() {
    let p = make_double_well::<f64>(2);
    let cfg = config(0.01, 0.5, p.known_l, p.known_rho, Mode::Deterministic);
    let run = |seed| {
        gose_deterministic(
            p.oracle.as_ref(),
            &p.x0s[0],
            &with_seed(cfg, seed),
            &GoseOptions::default(),
        )
    };
    let direct = run(derive_seed(7, 0)).unwrap();
    let wrapped = amplify(1, 7, run, |_| true).unwrap();
    assert_eq!(wrapped.certificate.point, direct.certificate.point);
    assert_eq!(wrapped.certificate.counters, direct.certificate.counters);
    assert_eq!(wrapped.certificate.certified, Some(true));
    assert!(!wrapped.all_runs_failed);
}

#[test]
fn amplify_is_deterministic_and_flags_failure() {
    let p = make_chained_saddles::<f64>(3);
    let cfg = config(0.01, 0.5, p.known_l, p.known_rho, Mode::Deterministic);
    let run = |seed| {
        gose_deterministic(
            p.oracle.as_ref(),
            &p.x0s[0],
            &with_seed(cfg, seed),
            &GoseOptions::default(),
        )
    };
    let a = amplify(3, 11, run, |_| false).unwrap();
    let b = amplify(3, 11, run, |_| false).unwrap();
    assert_eq!(a, b);
    assert!(a.all_runs_failed);
    assert_eq!(a.certificate.status, Status::FirstOrderOnly);
    assert_eq!(a.certificate.certified, Some(false));

    let calls = std::cell::Cell::new(0);
    let second = amplify(
        12,
        11,
        |seed| {
            calls.set(calls.get() + 1);
            run(seed)
        },
        |_| calls.get() >= 2,
    )
    .unwrap();
    assert_eq!(calls.get(), 2);
    assert_eq!(second.seed, derive_seed(11, 1));
}

#[test]
fn baseline_probes_every_iteration() {
    let p = make_double_well::<f64>(4);
    let cfg = config(0.01, 0.5, p.known_l, p.known_rho, Mode::Deterministic);
    let base =
        always_probe_baseline(p.oracle.as_ref(), &p.x0s[0], &cfg, &GoseOptions::default()).unwrap();
    assert_eq!(base.certificate.counters.nc_calls, base.trace.len() as u64);
    assert_eq!(base.certificate.status, Status::SecondOrderStationary);
    let gose =
        gose_deterministic(p.oracle.as_ref(), &p.x0s[0], &cfg, &GoseOptions::default()).unwrap();
    assert!(gose.certificate.counters.nc_calls < base.certificate.counters.nc_calls);
}

#[test]
fn reports_round_trip_through_json() {
    let p = make_double_well::<f64>(2);
    let cfg = config(0.01, 0.5, p.known_l, p.known_rho, Mode::Deterministic);
    let r =
        gose_deterministic(p.oracle.as_ref(), &p.x0s[0], &cfg, &GoseOptions::default()).unwrap();
    let json = serde_json::to_string(&r).unwrap();
    let back: RunReport<f64> = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
}

#[test]
fn unbounded_objective_reports_divergence() {
    let p = make_quadratic_saddle::<f64>(&[-1.0, 1.0], None);
    let cfg = config(0.01, 0.5, 1.0, 1.0, Mode::Deterministic);
    let err = gose_deterministic(
        p.oracle.as_ref(),
        &[0.0, 0.0],
        &cfg,
        &GoseOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, gose::GoseError::Diverged { .. }), "{err:?}");
}
