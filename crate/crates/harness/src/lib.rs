//! Experiment runner for the `gose` optimizers.
//!
//! Experiments are described by a TOML [`ExperimentConfig`]. Each run produces one JSON
//! summary line and, optionally, a CSV trace with one row per outer iteration. The
//! [`sweep`] module runs a configuration over a parameter grid, and [`verify`] drives the
//! statistical checks of the negative-curvature finders on planted spectra.

pub mod config;
pub mod error;
pub mod output;
pub mod runner;
pub mod sweep;
pub mod verify;

pub use config::{DriverKind, ExperimentConfig, Grid, OutputConfig, SmoothnessOverrides};
pub use error::HarnessError;
pub use runner::{prepare, run_experiment, run_seed, Prepared, RunSummary};
pub use sweep::{run_sweep, CellResult};
pub use verify::{verify_nc, SuiteRow, VerifyEngine, VerifyOptions};
