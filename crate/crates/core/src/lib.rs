//! Nonconvex optimizers that find approximate second-order stationary points
//! (`|grad f| <= eps`, `lambda_min(hess f) >= -eps_h`) by running first-order methods while the
//! gradient is large and taking a single negative-curvature step each time it becomes small.
//!
//! The crate is generic over the scalar type (`f32` or `f64`, see [`Scalar`]); the aliases
//! at the crate root fix the scalar for the common cases.
//!
//! ```
//! use gose::{gose_deterministic, make_quadratic_saddle, validate_config, Mode};
//!
//! let problem = make_quadratic_saddle::<f64>(&[2.0, 3.0], None);
//! let tol = gose::ToleranceConfigF64::default();
//! let smooth = gose::SmoothnessSpecF64 { l: 3.0, rho: 0.0, ..Default::default() };
//! let cfg = validate_config(&tol, &smooth, Mode::Deterministic).unwrap();
//! let report = gose_deterministic(problem.oracle.as_ref(), &[0.0, 0.0], &cfg, &Default::default()).unwrap();
//! assert_eq!(report.certificate.counters.nc_calls, 1);
//! ```

pub mod config;
pub mod counters;
pub mod drivers;
pub mod error;
pub mod escape;
pub mod linalg;
pub mod ncfind;
pub mod oracle;
pub mod problems;
pub mod scalar;
pub mod solvers;

pub use config::{validate_config, Mode, SmoothnessSpec, ToleranceConfig, ValidatedConfig};
pub use counters::EvalCounters;
pub use drivers::{
    always_probe_baseline, amplify, gose_deterministic, gose_finite_sum, gose_stochastic, Branch,
    Certificate, GoseOptions, RunReport, Status, TraceRecord,
};
pub use error::{GoseError, Result};
pub use escape::{adjust_direction, EscapeConfig, EscapeResult, EscapeStep, SubsampleRule};
pub use ncfind::{NcConfig, NcOutcome, NcTarget, NcVerdict, StochasticEngine};
pub use oracle::{finite_diff_hvp, Capabilities, Evaluator, HvpSource, Objective, SampleKey};
pub use problems::{
    build_problem, certify_second_order, make_quadratic_saddle, ProblemParams, ProblemSpec,
};
pub use scalar::Scalar;
pub use solvers::{ScsgConfig, SolverChoice};

pub type ToleranceConfigF64 = ToleranceConfig<f64>;
pub type ToleranceConfigF32 = ToleranceConfig<f32>;
pub type SmoothnessSpecF64 = SmoothnessSpec<f64>;
pub type SmoothnessSpecF32 = SmoothnessSpec<f32>;
pub type ValidatedConfigF64 = ValidatedConfig<f64>;
pub type ValidatedConfigF32 = ValidatedConfig<f32>;
pub type GoseOptionsF64 = GoseOptions<f64>;
pub type GoseOptionsF32 = GoseOptions<f32>;
pub type RunReportF64 = RunReport<f64>;
pub type RunReportF32 = RunReport<f32>;
pub type CertificateF64 = Certificate<f64>;
pub type CertificateF32 = Certificate<f32>;
pub type NcOutcomeF64 = NcOutcome<f64>;
pub type NcOutcomeF32 = NcOutcome<f32>;
pub type ProblemSpecF64 = ProblemSpec<f64>;
pub type ProblemSpecF32 = ProblemSpec<f32>;
