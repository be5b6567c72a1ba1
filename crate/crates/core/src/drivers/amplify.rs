use crate::error::Result;
use crate::scalar::Scalar;

use super::report::{RunReport, Status};

/// Seed of repetition `rep` derived from `base` (splitmix64 step).
pub fn derive_seed(base: u64, rep: usize) -> u64 {
    let mut z = base.wrapping_add((rep as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Repeats `run_once` with `reps` derived seeds and returns the first report the
/// certifier accepts. If none passes, returns the report with the smallest gradient norm
/// with `all_runs_failed` set. `reps = 1` runs once with `derive_seed(base_seed, 0)`.
///
/// Each returned certificate carries the certifier's verdict; a run that ended on
/// `Bottom` but failed certification is downgraded to `FirstOrderOnly`.
pub fn amplify<T, F, C>(
    reps: usize,
    base_seed: u64,
    mut run_once: F,
    mut certifier: C,
) -> Result<RunReport<T>>
where
    T: Scalar,
    F: FnMut(u64) -> Result<RunReport<T>>,
    C: FnMut(&RunReport<T>) -> bool,
{
    let mut best: Option<RunReport<T>> = None;
    for rep in 0..reps.max(1) {
        let mut report = run_once(derive_seed(base_seed, rep))?;
        let passed = certifier(&report);
        report.certificate.certified = Some(passed);
        if passed {
            return Ok(report);
        }
        if report.certificate.status == Status::SecondOrderStationary {
            report.certificate.status = Status::FirstOrderOnly;
        }
        let better = match &best {
            None => true,
            Some(b) => report.certificate.grad_norm < b.certificate.grad_norm,
        };
        if better {
            best = Some(report);
        }
    }
    let mut report = best.expect("at least one repetition");
    report.all_runs_failed = true;
    Ok(report)
}
