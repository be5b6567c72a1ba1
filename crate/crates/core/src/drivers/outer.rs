use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Mode, ValidatedConfig};
use crate::error::{GoseError, Result};
use crate::escape::{
    one_step_deterministic, one_step_finite_sum, one_step_stochastic, EscapeConfig, EscapeResult,
};
use crate::linalg::norm;
use crate::ncfind::NcConfig;
use crate::oracle::{Evaluator, HvpSource, Objective, SampleKey};
use crate::scalar::Scalar;
use crate::solvers::{
    derive_scsg_params, gd_to_stationarity, guarded_agd, pilot_variance, scsg_epoch, ScsgConfig,
    ScsgMults, ScsgSource, SolverChoice,
};

use super::report::{Branch, Certificate, RunReport, Status, TraceRecord};

/// Algorithmic choices shared by the drivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct GoseOptions<T> {
    pub esc: EscapeConfig<T>,
    pub nc: NcConfig<T>,
    pub solver: SolverChoice,
    /// Iteration cap of each large-gradient solver call.
    pub solver_max_iters: usize,
    pub scsg_mults: ScsgMults,
    /// Samples used to estimate the variance bound when none is configured.
    pub pilot_samples: usize,
    pub hvp_source: HvpSource,
}

impl<T: Scalar> Default for GoseOptions<T> {
    fn default() -> Self {
        Self {
            esc: EscapeConfig::default(),
            nc: NcConfig::default(),
            solver: SolverChoice::Gd,
            solver_max_iters: 100_000,
            scsg_mults: ScsgMults::default(),
            pilot_samples: 512,
            hvp_source: HvpSource::Auto,
        }
    }
}

/// Shared bookkeeping of one driver run.
pub(super) struct Run<'a, T: Scalar, O: Objective<T> + ?Sized> {
    pub eval: Evaluator<'a, T, O>,
    pub rng: ChaCha8Rng,
    pub trace: Vec<TraceRecord<T>>,
    cfg: ValidatedConfig<T>,
}

impl<'a, T: Scalar, O: Objective<T> + ?Sized> Run<'a, T, O> {
    pub fn new(oracle: &'a O, cfg: &ValidatedConfig<T>, hvp_source: HvpSource) -> Self {
        Self {
            eval: Evaluator::with_hvp_source(oracle, hvp_source),
            rng: ChaCha8Rng::seed_from_u64(cfg.tol.seed),
            trace: Vec::new(),
            cfg: *cfg,
        }
    }

    pub fn begin_iteration(&mut self) -> usize {
        self.eval.counters_mut().outer_iters += 1;
        self.trace.len() + 1
    }

    pub fn record(&mut self, iter: usize, branch: Branch, grad_norm: T, x: &[T], escaped: bool) {
        let f = self.eval.oracle().value(x);
        self.trace.push(TraceRecord {
            iter,
            branch,
            grad_norm,
            f,
            escaped,
            counters: *self.eval.counters(),
        });
    }

    pub fn finish(
        self,
        point: Vec<T>,
        grad_norm: T,
        min_eig_estimate: Option<T>,
        status: Status,
        scsg: Option<ScsgConfig<T>>,
    ) -> RunReport<T> {
        RunReport {
            certificate: Certificate {
                point,
                grad_norm,
                min_eig_estimate,
                status,
                counters: *self.eval.counters(),
                certified: None,
            },
            trace: self.trace,
            config: self.cfg,
            scsg,
            seed: self.cfg.tol.seed,
            all_runs_failed: false,
        }
    }
}

fn check_dim<T: Scalar, O: Objective<T> + ?Sized>(oracle: &O, x0: &[T]) -> Result<()> {
    if oracle.dim() != x0.len() {
        return Err(GoseError::DimensionMismatch {
            expected: oracle.dim(),
            got: x0.len(),
        });
    }
    Ok(())
}

/// Deterministic driver.
///
/// While `|grad f(x)| > eps` the chosen first-order solver runs to `eps`-stationarity;
/// otherwise one escape step is taken. The run ends at the first `Bottom`, returning the
/// current point as second-order stationary, or after `max_outer` iterations.
pub fn gose_deterministic<T, O>(
    oracle: &O,
    x0: &[T],
    cfg: &ValidatedConfig<T>,
    opts: &GoseOptions<T>,
) -> Result<RunReport<T>>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    check_dim(oracle, x0)?;
    opts.esc.validate(cfg)?;
    let eps = cfg.tol.eps;
    let mut run = Run::new(oracle, cfg, opts.hvp_source);
    let mut x = x0.to_vec();
    let mut g = run.eval.gradient(&x);

    for _ in 0..cfg.tol.max_outer {
        let iter = run.begin_iteration();
        let gn = norm(&g);
        if !gn.is_finite() {
            return Err(GoseError::Diverged { iter });
        }
        if gn > eps {
            let out = match opts.solver {
                SolverChoice::Gd => gd_to_stationarity(
                    &mut run.eval,
                    &x,
                    cfg.smooth.l,
                    eps,
                    opts.solver_max_iters,
                    Some(g),
                ),
                SolverChoice::Agd => guarded_agd(
                    &mut run.eval,
                    &x,
                    cfg.smooth.l,
                    cfg.rho_eff(),
                    eps,
                    opts.solver_max_iters,
                    Some(g),
                ),
            };
            x = out.point;
            g = out.grad;
            run.record(iter, Branch::LargeGradient, gn, &x, false);
        } else {
            run.eval.counters_mut().small_region_entries += 1;
            match one_step_deterministic(
                &mut run.eval,
                &x,
                &g,
                cfg,
                &opts.esc,
                &opts.nc,
                &mut run.rng,
            )? {
                EscapeResult::Bottom { measured_rayleigh } => {
                    run.record(iter, Branch::SmallGradient, gn, &x, false);
                    return Ok(run.finish(
                        x,
                        gn,
                        Some(measured_rayleigh),
                        Status::SecondOrderStationary,
                        None,
                    ));
                }
                EscapeResult::Point(step) => {
                    x = step.point;
                    g = run.eval.gradient(&x);
                    run.record(iter, Branch::SmallGradient, gn, &x, true);
                }
            }
        }
    }
    let gn = norm(&g);
    Ok(run.finish(x, gn, None, Status::BudgetExhausted, None))
}

/// Stochastic driver.
///
/// Each outer iteration draws a batch of `B` samples and branches on the batch-gradient
/// norm against `eps/2`. The same batch gradient anchors the SCSG epoch of the large
/// branch. Without a configured variance bound, one is estimated from
/// `opts.pilot_samples` samples at `x0` first.
pub fn gose_stochastic<T, O>(
    oracle: &O,
    x0: &[T],
    cfg: &ValidatedConfig<T>,
    opts: &GoseOptions<T>,
) -> Result<RunReport<T>>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    check_dim(oracle, x0)?;
    if !oracle.capabilities().stochastic {
        return Err(GoseError::NotStochastic);
    }
    let mut cfg = *cfg;
    cfg.mode = Mode::Stochastic;
    opts.esc.validate(&cfg)?;
    let mut run = Run::new(oracle, &cfg, opts.hvp_source);
    let pilot = match cfg.smooth.variance_bound() {
        Some(_) => None,
        None => Some(pilot_variance(
            &mut run.eval,
            x0,
            opts.pilot_samples,
            &mut run.rng,
        )?),
    };
    let scsg = derive_scsg_params(&cfg, 0, &opts.scsg_mults, pilot)?;
    let threshold = cfg.tol.eps / T::lit(2.0);
    let mut x = x0.to_vec();
    let mut last_gn = T::infinity();

    for _ in 0..cfg.tol.max_outer {
        let iter = run.begin_iteration();
        let keys: Vec<SampleKey> = (0..scsg.batch)
            .map(|_| SampleKey(run.rng.random()))
            .collect();
        let g = run.eval.mean_sample_gradient(&x, &keys);
        let gn = norm(&g);
        if !gn.is_finite() {
            return Err(GoseError::Diverged { iter });
        }
        last_gn = gn;
        if gn > threshold {
            run.eval.counters_mut().epochs_run += 1;
            let out = scsg_epoch(
                &mut run.eval,
                &x,
                &g,
                &scsg,
                ScsgSource::Stochastic,
                &mut run.rng,
            )?;
            x = out.point;
            run.record(iter, Branch::LargeGradient, gn, &x, false);
        } else {
            run.eval.counters_mut().small_region_entries += 1;
            match one_step_stochastic(&mut run.eval, &x, &cfg, &opts.esc, &opts.nc, &mut run.rng)? {
                EscapeResult::Bottom { measured_rayleigh } => {
                    run.record(iter, Branch::SmallGradient, gn, &x, false);
                    return Ok(run.finish(
                        x,
                        gn,
                        Some(measured_rayleigh),
                        Status::SecondOrderStationary,
                        Some(scsg),
                    ));
                }
                EscapeResult::Point(step) => {
                    x = step.point;
                    run.record(iter, Branch::SmallGradient, gn, &x, true);
                }
            }
        }
    }
    // Diagnostic only: the exact gradient is not charged to the run.
    let gn = if oracle.capabilities().deterministic {
        norm(&oracle.gradient(&x))
    } else {
        last_gn
    };
    Ok(run.finish(x, gn, None, Status::BudgetExhausted, Some(scsg)))
}

/// Finite-sum driver: full gradient each outer iteration, threshold `eps`, SCSG epochs
/// with `B = n`, `b = 1` in the large branch.
pub fn gose_finite_sum<T, O>(
    oracle: &O,
    x0: &[T],
    cfg: &ValidatedConfig<T>,
    opts: &GoseOptions<T>,
) -> Result<RunReport<T>>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    check_dim(oracle, x0)?;
    let n = oracle.n_components();
    if !oracle.capabilities().finite_sum || n == 0 {
        return Err(GoseError::NotFiniteSum);
    }
    let mut cfg = *cfg;
    cfg.mode = Mode::FiniteSum;
    opts.esc.validate(&cfg)?;
    let scsg = derive_scsg_params(&cfg, n, &opts.scsg_mults, None)?;
    let mut run = Run::new(oracle, &cfg, opts.hvp_source);
    let eps = cfg.tol.eps;
    let mut x = x0.to_vec();
    let mut last_gn = T::infinity();

    for _ in 0..cfg.tol.max_outer {
        let iter = run.begin_iteration();
        let g = run.eval.full_gradient(&x);
        let gn = norm(&g);
        if !gn.is_finite() {
            return Err(GoseError::Diverged { iter });
        }
        last_gn = gn;
        if gn > eps {
            run.eval.counters_mut().epochs_run += 1;
            let out = scsg_epoch(
                &mut run.eval,
                &x,
                &g,
                &scsg,
                ScsgSource::FiniteSum,
                &mut run.rng,
            )?;
            x = out.point;
            run.record(iter, Branch::LargeGradient, gn, &x, false);
        } else {
            run.eval.counters_mut().small_region_entries += 1;
            match one_step_finite_sum(
                &mut run.eval,
                &x,
                &g,
                &cfg,
                &opts.esc,
                &opts.nc,
                &mut run.rng,
            )? {
                EscapeResult::Bottom { measured_rayleigh } => {
                    run.record(iter, Branch::SmallGradient, gn, &x, false);
                    return Ok(run.finish(
                        x,
                        gn,
                        Some(measured_rayleigh),
                        Status::SecondOrderStationary,
                        Some(scsg),
                    ));
                }
                EscapeResult::Point(step) => {
                    x = step.point;
                    run.record(iter, Branch::SmallGradient, gn, &x, true);
                }
            }
        }
    }
    // The last measured full gradient belongs to the previous iterate; report the exact
    // norm at the returned point without charging it.
    let gn = if last_gn.is_finite() {
        norm(&oracle.gradient(&x))
    } else {
        last_gn
    };
    Ok(run.finish(x, gn, None, Status::BudgetExhausted, Some(scsg)))
}
