use serde::{Deserialize, Serialize};

/// Oracle-call and control-flow tallies for one run.
///
/// One gradient, one stochastic gradient, one component gradient and one
/// Hessian-vector product each count as one unit of oracle cost.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounters {
    pub grad_evals: u64,
    pub stoch_grad_evals: u64,
    pub component_grad_evals: u64,
    pub hvp_evals: u64,
    pub fn_evals: u64,
    pub nc_calls: u64,
    pub escape_steps: u64,
    /// Number of times a driver entered a small-gradient region.
    pub small_region_entries: u64,
    pub outer_iters: u64,
    pub epochs_run: u64,
}

impl EvalCounters {
    /// Gradient-type oracle units (every kind of gradient plus HVPs).
    pub fn oracle_units(&self) -> u64 {
        self.grad_evals + self.stoch_grad_evals + self.component_grad_evals + self.hvp_evals
    }

    /// True when every field of `self` is at least the matching field of `earlier`.
    pub fn dominates(&self, earlier: &EvalCounters) -> bool {
        self.grad_evals >= earlier.grad_evals
            && self.stoch_grad_evals >= earlier.stoch_grad_evals
            && self.component_grad_evals >= earlier.component_grad_evals
            && self.hvp_evals >= earlier.hvp_evals
            && self.fn_evals >= earlier.fn_evals
            && self.nc_calls >= earlier.nc_calls
            && self.escape_steps >= earlier.escape_steps
            && self.small_region_entries >= earlier.small_region_entries
            && self.outer_iters >= earlier.outer_iters
            && self.epochs_run >= earlier.epochs_run
    }
}
