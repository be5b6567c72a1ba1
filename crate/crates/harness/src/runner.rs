use std::path::Path;
use std::time::Instant;

use gose::{
    always_probe_baseline, amplify, certify_second_order, gose_deterministic, gose_finite_sum,
    gose_stochastic, validate_config, EvalCounters, Mode, ProblemSpec, RunReport, ScsgConfig,
    SmoothnessSpec, Status, ValidatedConfig,
};
use serde::{Deserialize, Serialize};

use crate::config::{DriverKind, ExperimentConfig};
use crate::error::Result;
use crate::output::{jsonl, trace_csv, write_atomic};

/// Largest dimension for which runs are certified with a dense eigendecomposition.
pub const CERTIFY_MAX_DIM: usize = 500;

/// A built problem together with its validated tolerances.
#[derive(Debug)]
pub struct Prepared {
    pub problem: ProblemSpec<f64>,
    pub validated: ValidatedConfig<f64>,
}

/// One line of `summary.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub mode: Mode,
    pub driver: DriverKind,
    pub seed: u64,
    pub reps: usize,
    pub status: Status,
    /// Dense second-order check of the returned point; absent above [`CERTIFY_MAX_DIM`].
    pub certified: Option<bool>,
    pub lambda_min: Option<f64>,
    pub final_f: f64,
    pub grad_norm: f64,
    pub min_eig_estimate: Option<f64>,
    pub point: Vec<f64>,
    pub counters: EvalCounters,
    pub all_runs_failed: bool,
    pub trace_len: usize,
    pub config: ValidatedConfig<f64>,
    pub scsg: Option<ScsgConfig<f64>>,
    pub wall_time_s: f64,
}

/// Builds the problem and validates tolerances, smoothness constants and escape options.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.check()?;
    let problem = gose::build_problem::<f64>(&cfg.problem, &cfg.params)?;
    let o = &cfg.smoothness;
    let defaults = SmoothnessSpec::<f64>::default();
    let smooth = SmoothnessSpec {
        l: o.l.unwrap_or(problem.known_l),
        rho: o.rho.unwrap_or(problem.known_rho),
        rho_min: o.rho_min.unwrap_or(defaults.rho_min),
        delta_f: o.delta_f,
        h_star: o.h_star,
        sigma: o.sigma,
    };
    let validated = validate_config(&cfg.tolerance, &smooth, cfg.mode)?;
    cfg.options.esc.validate(&validated)?;
    Ok(Prepared { problem, validated })
}

fn drive(prep: &Prepared, cfg: &ExperimentConfig, seed: u64) -> gose::Result<RunReport<f64>> {
    let oracle = prep.problem.oracle.as_ref();
    let x0 = &prep.problem.x0s[0];
    let mut validated = prep.validated;
    validated.tol.seed = seed;
    let opts = &cfg.options;
    match (cfg.mode, cfg.driver) {
        (Mode::Deterministic, DriverKind::Gose) => gose_deterministic(oracle, x0, &validated, opts),
        (Mode::Deterministic, DriverKind::AlwaysProbe) => {
            always_probe_baseline(oracle, x0, &validated, opts)
        }
        (Mode::Stochastic, _) => gose_stochastic(oracle, x0, &validated, opts),
        (Mode::FiniteSum, _) => gose_finite_sum(oracle, x0, &validated, opts),
    }
}

/// Runs one seed (with amplification when `reps > 1`) and certifies the result.
pub fn run_seed(
    prep: &Prepared,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(RunReport<f64>, RunSummary)> {
    let start = Instant::now();
    let oracle = prep.problem.oracle.as_ref();
    let (eps, eps_h) = (prep.validated.tol.eps, prep.validated.tol.eps_h);
    let certifiable = prep.problem.dim() <= CERTIFY_MAX_DIM;
    let check = |x: &[f64]| {
        certifiable
            .then(|| certify_second_order(oracle, x, eps, eps_h).ok())
            .flatten()
    };

    let mut report = if cfg.reps > 1 {
        amplify(
            cfg.reps,
            seed,
            |s| drive(prep, cfg, s),
            |r| check(&r.certificate.point).is_some_and(|c| c.passed),
        )?
    } else {
        drive(prep, cfg, seed)?
    };
    let cert = check(&report.certificate.point);
    if let Some(c) = &cert {
        report.certificate.certified = Some(c.passed);
    }

    let c = &report.certificate;
    let summary = RunSummary {
        problem: cfg.problem.clone(),
        mode: cfg.mode,
        driver: cfg.driver,
        seed,
        reps: cfg.reps,
        status: c.status,
        certified: c.certified,
        lambda_min: cert.map(|c| c.lambda_min),
        final_f: oracle.value(&c.point),
        grad_norm: c.grad_norm,
        min_eig_estimate: c.min_eig_estimate,
        point: c.point.clone(),
        counters: c.counters,
        all_runs_failed: report.all_runs_failed,
        trace_len: report.trace.len(),
        config: report.config,
        scsg: report.scsg,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((report, summary))
}

/// Runs every seed in order, writing `trace_seed{N}.csv` files and `summary.jsonl` into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<RunSummary>> {
    let prep = prepare(cfg)?;
    let mut summaries = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let (report, summary) = run_seed(&prep, cfg, seed)?;
        if cfg.output.trace {
            let path = out.join(format!("trace_seed{seed}.csv"));
            write_atomic(&path, &trace_csv(&report.trace)?)?;
        }
        summaries.push(summary);
    }
    write_atomic(&out.join("summary.jsonl"), &jsonl(&summaries)?)?;
    Ok(summaries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothness_defaults_come_from_the_problem() {
        let mut cfg = ExperimentConfig::new("chained_saddles", Mode::Deterministic);
        cfg.params.d = 3;
        let prep = prepare(&cfg).unwrap();
        assert_eq!(prep.validated.smooth.l, prep.problem.known_l);
        cfg.smoothness.l = Some(100.0);
        assert_eq!(prepare(&cfg).unwrap().validated.smooth.l, 100.0);
    }

    #[test]
    fn chained_run_is_certified() {
        let mut cfg = ExperimentConfig::new("chained_saddles", Mode::Deterministic);
        cfg.params.d = 3;
        let prep = prepare(&cfg).unwrap();
        let (report, summary) = run_seed(&prep, &cfg, 7).unwrap();
        assert_eq!(summary.status, Status::SecondOrderStationary);
        assert_eq!(summary.certified, Some(true));
        assert!(summary.counters.nc_calls >= 1);
        report.check_invariants().unwrap();
    }
}
