//! Outer drivers: branch on the gradient norm, run a first-order method in large-gradient
//! regions and a single negative-curvature step in small-gradient ones, stop on `Bottom`.

mod amplify;
mod baseline;
mod outer;
mod report;

pub use amplify::{amplify, derive_seed};
pub use baseline::always_probe_baseline;
pub use outer::{gose_deterministic, gose_finite_sum, gose_stochastic, GoseOptions};
pub use report::{Branch, Certificate, RunReport, Status, TraceRecord};
