use crate::config::ValidatedConfig;
use crate::error::{GoseError, Result};
use crate::escape::{adjust_direction, nc_target, EscapeConfig};
use crate::linalg::{axpy, norm};
use crate::ncfind::{approx_nc_deterministic, NcVerdict};
use crate::oracle::Objective;
use crate::scalar::Scalar;

use super::outer::{GoseOptions, Run};
use super::report::{Branch, RunReport, Status};

/// Comparison method that probes for negative curvature at every outer iteration.
///
/// Each iteration runs the deterministic finder at the current point. A direction is
/// followed with the usual escape step; otherwise the run stops if `|grad f| <= eps` and
/// takes one `1/L` gradient step if not. Every iteration therefore costs one finder call,
/// which is what the one-step drivers avoid. `small_region_entries` is not used.
pub fn always_probe_baseline<T, O>(
    oracle: &O,
    x0: &[T],
    cfg: &ValidatedConfig<T>,
    opts: &GoseOptions<T>,
) -> Result<RunReport<T>>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    let esc: &EscapeConfig<T> = &opts.esc;
    esc.validate(cfg)?;
    let eta = esc.step_size(cfg);
    let step = T::one() / cfg.smooth.l;
    let mut run = Run::new(oracle, cfg, opts.hvp_source);
    let mut x = x0.to_vec();
    let mut g = run.eval.gradient(&x);

    for _ in 0..cfg.tol.max_outer {
        let iter = run.begin_iteration();
        let gn = norm(&g);
        if !gn.is_finite() {
            return Err(GoseError::Diverged { iter });
        }
        let nc =
            approx_nc_deterministic(&mut run.eval, &x, &nc_target(cfg), &opts.nc, &mut run.rng)?;
        let branch = if gn > cfg.tol.eps {
            Branch::LargeGradient
        } else {
            Branch::SmallGradient
        };
        match nc.verdict {
            NcVerdict::Direction { direction, .. } => {
                let v = adjust_direction(&g, &direction);
                axpy(eta, &v, &mut x);
                run.eval.counters_mut().escape_steps += 1;
                g = run.eval.gradient(&x);
                run.record(iter, branch, gn, &x, true);
            }
            NcVerdict::Bottom if gn <= cfg.tol.eps => {
                run.record(iter, branch, gn, &x, false);
                return Ok(run.finish(
                    x,
                    gn,
                    Some(nc.measured_rayleigh),
                    Status::SecondOrderStationary,
                    None,
                ));
            }
            NcVerdict::Bottom => {
                axpy(-step, &g, &mut x);
                g = run.eval.gradient(&x);
                run.record(iter, branch, gn, &x, false);
            }
        }
    }
    let gn = norm(&g);
    Ok(run.finish(x, gn, None, Status::BudgetExhausted, None))
}
