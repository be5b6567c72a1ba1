//! Large-gradient machinery: first-order solvers and the SCSG epoch.

mod first_order;
mod geometric;
mod scsg;

pub use first_order::{gd_to_stationarity, guarded_agd, FirstOrderOutcome, SolverChoice};
pub use geometric::sample_geometric;
pub use scsg::{
    derive_scsg_params, pilot_variance, scsg_epoch, scsg_epoch_fixed, EpochOutcome, ScsgConfig,
    ScsgMults, ScsgSource,
};
