use serde::{Deserialize, Serialize};

use crate::config::{Mode, ValidatedConfig};
use crate::counters::EvalCounters;
use crate::solvers::ScsgConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Ended on a `Bottom` from the negative-curvature finder. Holds with probability `1 - delta`.
    SecondOrderStationary,
    /// Gradient small but the second-order condition failed an external check.
    FirstOrderOnly,
    /// `max_outer` reached.
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    LargeGradient,
    SmallGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate<T> {
    pub point: Vec<T>,
    pub grad_norm: T,
    /// Smallest Rayleigh quotient seen by the final negative-curvature call.
    pub min_eig_estimate: Option<T>,
    pub status: Status,
    pub counters: EvalCounters,
    /// Verdict of an external certifier, when one was consulted.
    pub certified: Option<bool>,
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord<T> {
    pub iter: usize,
    pub branch: Branch,
    /// Norm of the gradient (or batch gradient) the branch decision was based on.
    pub grad_norm: T,
    /// Objective value at the iterate after this iteration; not charged to the counters.
    pub f: T,
    /// A small-gradient iteration that took its escape step.
    pub escaped: bool,
    pub counters: EvalCounters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: crate::Scalar + Deserialize<'de>"))]
pub struct RunReport<T> {
    pub certificate: Certificate<T>,
    pub trace: Vec<TraceRecord<T>>,
    pub config: ValidatedConfig<T>,
    pub scsg: Option<ScsgConfig<T>>,
    pub seed: u64,
    /// Set by [`super::amplify`] when no repetition passed the certifier.
    pub all_runs_failed: bool,
}

impl<T> RunReport<T> {
    pub fn terminated_on_bottom(&self) -> bool {
        matches!(
            self.certificate.status,
            Status::SecondOrderStationary | Status::FirstOrderOnly
        )
    }

    /// Checks the accounting identities of a report produced by one of the GOSE drivers
    /// (not the always-probe baseline), returning the first violation found.
    ///
    /// * every small-gradient entry makes exactly one finder call and at most one step,
    ///   so `nc_calls = small_region_entries` and `escape_steps = nc_calls - [ended on Bottom]`;
    /// * large-gradient iterations make no finder call;
    /// * counters never decrease along the trace and the last record matches the certificate;
    /// * stochastic and finite-sum runs satisfy `outer_iters = epochs_run + small_region_entries`;
    /// * in deterministic mode an escape is always followed by a large-gradient iteration.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let c = &self.certificate.counters;
        if self.trace.len() > self.config.tol.max_outer {
            return Err(format!(
                "trace length {} exceeds max_outer {}",
                self.trace.len(),
                self.config.tol.max_outer
            ));
        }
        if self.trace.len() as u64 != c.outer_iters {
            return Err(format!(
                "trace length {} but outer_iters {}",
                self.trace.len(),
                c.outer_iters
            ));
        }
        if c.nc_calls != c.small_region_entries {
            return Err(format!(
                "nc_calls {} != small_region_entries {}",
                c.nc_calls, c.small_region_entries
            ));
        }
        let ended = u64::from(self.terminated_on_bottom());
        if c.escape_steps + ended != c.nc_calls {
            return Err(format!(
                "escape_steps {} inconsistent with nc_calls {} (bottom: {ended})",
                c.escape_steps, c.nc_calls
            ));
        }
        if self.config.mode != Mode::Deterministic
            && c.outer_iters != c.epochs_run + c.small_region_entries
        {
            return Err(format!(
                "outer_iters {} != epochs_run {} + small_region_entries {}",
                c.outer_iters, c.epochs_run, c.small_region_entries
            ));
        }
        let mut prev = EvalCounters::default();
        for (k, rec) in self.trace.iter().enumerate() {
            let now = &rec.counters;
            if !now.dominates(&prev) {
                return Err(format!("counters decreased at record {k}"));
            }
            let nc = now.nc_calls - prev.nc_calls;
            let steps = now.escape_steps - prev.escape_steps;
            let expected_nc = u64::from(rec.branch == Branch::SmallGradient);
            if nc != expected_nc || steps != u64::from(rec.escaped) || steps > nc {
                return Err(format!(
                    "record {k}: {nc} finder calls and {steps} escape steps on {:?}",
                    rec.branch
                ));
            }
            if self.config.mode == Mode::Deterministic && k > 0 {
                let before = &self.trace[k - 1];
                if before.escaped && rec.branch != Branch::LargeGradient {
                    return Err(format!(
                        "escape at record {} not followed by a large-gradient iteration",
                        k - 1
                    ));
                }
            }
            prev = *now;
        }
        if let Some(last) = self.trace.last() {
            if last.counters != *c {
                return Err("last trace record disagrees with certificate counters".into());
            }
        }
        if self.terminated_on_bottom() {
            match self.trace.last() {
                Some(r) if r.branch == Branch::SmallGradient && !r.escaped => {}
                _ => {
                    return Err(
                        "Bottom status without a final non-escaping small-gradient record".into(),
                    )
                }
            }
        }
        Ok(())
    }
}
