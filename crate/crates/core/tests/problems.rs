mod common;

use common::*;
use gose::problems::{
    lipschitz_spot_check, make_chained_saddles, make_nonconvex_pca, make_standard, ChainParams,
    ChainedSaddles, NonconvexPca, Quadratic, Rosenbrock, SymMatrix, PROBLEM_NAMES,
};
use gose::{
    build_problem, certify_second_order, finite_diff_hvp, make_quadratic_saddle, Evaluator,
    GoseError, NcConfig, NcTarget, Objective, ProblemParams, ProblemSpecF64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn registry() -> Vec<ProblemSpecF64> {
    let mut out = Vec::new();
    for name in PROBLEM_NAMES {
        for d in [2usize, 5] {
            let params = ProblemParams {
                d,
                n: 40,
                seed: 3,
                ..Default::default()
            };
            out.push(build_problem::<f64>(name, &params).unwrap());
        }
    }
    out
}

#[test]
fn declared_constants_survive_spot_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for spec in registry() {
        let report = lipschitz_spot_check(&spec, 1000, &mut rng).unwrap();
        assert!(
            report.holds(spec.known_l, spec.known_rho),
            "{} d={}: {report:?}",
            spec.name,
            spec.dim()
        );
    }
}

fn central_diff_gradient<O: Objective<f64> + ?Sized>(f: &O, x: &[f64]) -> Vec<f64> {
    let h = 1e-5 * (1.0 + norm(x));
    (0..x.len())
        .map(|i| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += h;
            b[i] -= h;
            (f.value(&a) - f.value(&b)) / (2.0 * h)
        })
        .collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(b).max(1e-3)
}

#[test]
fn gradients_and_hvps_are_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for spec in registry() {
        let f = spec.oracle.as_ref();
        for _ in 0..20 {
            let x = spec.region.sample(&mut rng);
            let g = f.gradient(&x);
            assert!(
                rel_err(&central_diff_gradient(f, &x), &g) <= 1e-5,
                "{} gradient",
                spec.name
            );
            let v: Vec<f64> = (0..x.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut eval = Evaluator::new(f);
            let fd = finite_diff_hvp(&mut eval, &x, &v).unwrap();
            assert!(rel_err(&fd, &f.hvp(&x, &v)) <= 1e-5, "{} hvp", spec.name);
            assert_eq!(eval.counters().grad_evals, 2);
        }
    }
}

#[test]
fn finite_difference_hvp_examples() {
    let q = Quadratic::new(SymMatrix::<f64>::from_rows(2, vec![2.0, 0.0, 0.0, 3.0]));
    let mut eval = Evaluator::new(&q);
    let a = finite_diff_hvp(&mut eval, &[1.0, 1.0], &[1.0, 0.0]).unwrap();
    assert!((a[0] - 2.0).abs() < 1e-6 && a[1].abs() < 1e-6);
    let b = finite_diff_hvp(&mut eval, &[1.0, 1.0], &[0.0, 2.0]).unwrap();
    assert!(b[0].abs() < 1e-6 && (b[1] - 6.0).abs() < 1e-6);
    assert!(matches!(
        finite_diff_hvp(&mut eval, &[1.0, 1.0], &[0.0, 0.0]),
        Err(GoseError::ZeroDirection)
    ));

    let r = Rosenbrock { d: 2 };
    let mut eval = Evaluator::new(&r);
    let fd = finite_diff_hvp(&mut eval, &[1.0, 1.0], &[1.0, 0.0]).unwrap();
    // analytic column: d2f/dx1^2 = 1200 x1^2 - 400 x2 + 2 = 802, d2f/dx1dx2 = -400 x1 = -400
    assert!(rel_err(&fd, &[802.0, -400.0]) <= 1e-5);
}

#[test]
fn quadratic_saddle_examples() {
    let p = make_quadratic_saddle::<f64>(&[1.0, -1.0], None);
    assert_eq!(p.known_l, 1.0);
    assert_eq!(p.planted_saddles, vec![vec![0.0, 0.0]]);
    assert!((p.oracle.value(&[2.0, 1.0]) - 1.5).abs() < 1e-15);

    let convex = make_quadratic_saddle::<f64>(&[1.0, 2.0, 0.5], Some(5));
    assert!(convex.planted_saddles.is_empty());
    let mut eval = Evaluator::new(convex.oracle.as_ref());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let target = NcTarget {
        eps_h: 0.5,
        delta: 0.01,
        l: 2.0,
    };
    let out = gose::ncfind::approx_nc_deterministic(
        &mut eval,
        &[0.0; 3],
        &target,
        &NcConfig::default(),
        &mut rng,
    )
    .unwrap();
    assert!(out.is_bottom());

    let spectrum = planted_spectrum(50, -0.7, 0.0, 2.0, &mut rng);
    let big = make_quadratic_saddle::<f64>(&spectrum, Some(6));
    let cert = certify_second_order(big.oracle.as_ref(), &vec![0.0; 50], 0.01, 0.5).unwrap();
    assert!(!cert.passed);
    assert!((cert.lambda_min + 0.7).abs() < 1e-10);
}

#[test]
fn chained_saddles_examples() {
    let p = make_chained_saddles::<f64>(2);
    assert_eq!(p.planted_saddles.len(), 2);
    for s in &p.planted_saddles {
        assert!(norm(&p.oracle.gradient(s)) <= 1e-8);
        assert!(dense_min_eig(p.oracle.as_ref(), s) <= -1.0 + 1e-9);
    }
    let chain = ChainedSaddles::<f64>::new(2, ChainParams::default());
    let min = chain.stage_point(2);
    assert!(norm(&p.oracle.gradient(&min)) <= 1e-8);
    let cert = certify_second_order(p.oracle.as_ref(), &min, 0.01, 0.5).unwrap();
    assert!(cert.passed);
    assert!((p.oracle.value(&min) - p.known_min.unwrap()).abs() < 1e-9);
}

#[test]
fn pca_examples() {
    let single = NonconvexPca::<f64>::from_data(vec![vec![1.0, 0.0]]);
    let col0 = single.hvp(&[0.0, 0.0], &[1.0, 0.0]);
    let col1 = single.hvp(&[0.0, 0.0], &[0.0, 1.0]);
    assert_eq!((col0, col1), (vec![-1.0, 0.0], vec![0.0, 0.0]));
    assert!(
        !certify_second_order(&single, &[0.0, 0.0], 0.01, 0.9)
            .unwrap()
            .passed
    );

    let pca = NonconvexPca::<f64>::spiked(60, 8, 2.0, 0.2, 4);
    let xstar = pca.minimizer();
    assert!(norm(&pca.gradient(&xstar)) <= 1e-8);
    assert!((pca.value(&xstar) - pca.min_value()).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = pca.n_components();
    let mut avg = vec![0.0; 8];
    for i in 0..n {
        for (a, c) in avg.iter_mut().zip(pca.component_gradient(i, &x)) {
            *a += c / n as f64;
        }
    }
    assert!(rel_err(&avg, &pca.gradient(&x)) <= 1e-12);

    let spec = make_nonconvex_pca::<f64>(200, 20, 7);
    let top = NonconvexPca::<f64>::spiked(200, 20, 2.0, 0.2, 7)
        .covariance_spectrum()
        .eigenvalues[0];
    assert!((spec.known_min.unwrap() + top * top / 4.0).abs() < 1e-12);
}

#[test]
fn standard_function_examples() {
    let r = make_standard::<f64>("rosenbrock", 2).unwrap();
    assert_eq!(r.oracle.value(&[1.0, 1.0]), 0.0);
    assert_eq!(r.oracle.gradient(&[1.0, 1.0]), vec![0.0, 0.0]);
    let ra = make_standard::<f64>("rastrigin", 2).unwrap();
    assert_eq!(ra.oracle.value(&[0.0, 0.0]), 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let f = Rosenbrock { d: 4 };
        assert!(rel_err(&central_diff_gradient(&f, &x), &f.gradient(&x)) <= 1e-6);
    }
    assert!(matches!(
        make_standard::<f64>("ackley", 2),
        Err(GoseError::UnknownProblem(_))
    ));
    assert!(matches!(
        build_problem::<f64>("nope", &ProblemParams::default()),
        Err(GoseError::UnknownProblem(_))
    ));
}

#[test]
fn certifier_examples_and_limits() {
    let convex = make_quadratic_saddle::<f64>(&[0.5, 2.0], Some(1));
    let cert = certify_second_order(convex.oracle.as_ref(), &[0.0, 0.0], 0.01, 0.5).unwrap();
    assert!(cert.passed && cert.grad_norm == 0.0);
    assert!((cert.lambda_min - 0.5).abs() < 1e-12);

    let saddle = make_quadratic_saddle::<f64>(&[1.0, -1.0], None);
    let cert = certify_second_order(saddle.oracle.as_ref(), &[0.0, 0.0], 0.01, 0.5).unwrap();
    assert!(!cert.passed && cert.grad_norm == 0.0);
    assert!((cert.lambda_min + 1.0).abs() < 1e-12);

    let huge = Rosenbrock { d: 501 };
    assert!(matches!(
        certify_second_order(&huge, &vec![0.0; 501], 0.01, 0.5),
        Err(GoseError::DimensionTooLarge { .. })
    ));
}

#[test]
fn problem_params_parse_from_toml_like_json() {
    let p: ProblemParams = serde_json::from_str(r#"{"d": 4, "sigma": 0.1}"#).unwrap();
    assert_eq!(p.d, 4);
    assert_eq!(p.sigma, Some(0.1));
    let noisy = build_problem::<f64>("double_well", &p).unwrap();
    assert!(noisy.oracle.capabilities().stochastic);
    assert!(serde_json::from_str::<ProblemParams>(r#"{"dims": 4}"#).is_err());
}
