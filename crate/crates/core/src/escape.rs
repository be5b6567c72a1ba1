//! One-step negative-curvature escapes from small-gradient regions.
//!
//! Each procedure asks a negative-curvature finder for a direction `v`, flips it against
//! the (estimated) gradient and moves exactly once by `eta = c_h * eps_h / (c1 * rho_eff)`.
//! There is no retry loop: a `Bottom` from the finder is passed through to the driver,
//! where it ends the run.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Mode, ValidatedConfig};
use crate::error::{GoseError, Result};
use crate::linalg::{axpy, dot};
use crate::ncfind::{
    approx_nc_deterministic, approx_nc_finite_sum, approx_nc_stochastic, NcConfig, NcOutcome,
    NcTarget, NcVerdict,
};
use crate::oracle::{Evaluator, Objective, SampleKey};
use crate::scalar::Scalar;

/// How the stochastic escape sizes its gradient subsample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsampleRule {
    /// `ceil(s_mult ln(1/delta) / eps_h^2)`.
    Curvature,
    /// `ceil(conc_mult sigma^2 ln(1/delta) / (c_conc eps)^2)`, needs `sigma`.
    Concentration,
    /// The larger of the two when `sigma` is known, `Curvature` otherwise.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EscapeConfig<T> {
    pub c_h: T,
    pub c_conc: T,
    pub s_mult: T,
    pub conc_mult: T,
    pub subsample_rule: SubsampleRule,
}

impl<T: Scalar> Default for EscapeConfig<T> {
    fn default() -> Self {
        Self {
            c_h: T::lit(0.5),
            c_conc: T::lit(0.25),
            s_mult: T::lit(4.0),
            conc_mult: T::lit(96.0),
            subsample_rule: SubsampleRule::Auto,
        }
    }
}

impl<T: Scalar> EscapeConfig<T> {
    /// Guaranteed decrease constant `C_H^2/4 - C_H^3/6` of the exact-gradient escape.
    pub fn c_prime_det(&self) -> T {
        let c = self.c_h;
        c * c / T::lit(4.0) - c * c * c / T::lit(6.0)
    }

    /// Decrease constant `C_H^2/4 - C_H^3/3` of the subsampled escape.
    pub fn c_prime_stoch(&self) -> T {
        let c = self.c_h;
        c * c / T::lit(4.0) - c * c * c / T::lit(3.0)
    }

    /// `eta = c_h * eps_h / (c1 * rho_eff)`.
    pub fn step_size(&self, cfg: &ValidatedConfig<T>) -> T {
        self.c_h * cfg.tol.eps_h / (cfg.tol.c1 * cfg.rho_eff())
    }

    /// Guaranteed decrease `C' eps_h^3 / (c1 rho_eff)^2` for the mode's constant.
    pub fn guaranteed_decrease(&self, cfg: &ValidatedConfig<T>) -> T {
        let c_prime = match cfg.mode {
            Mode::Stochastic => self.c_prime_stoch(),
            _ => self.c_prime_det(),
        };
        let r = cfg.tol.c1 * cfg.rho_eff();
        c_prime * cfg.tol.eps_h.powi(3) / (r * r)
    }

    /// Admissible interval for `c_h` given the validated tolerances.
    pub fn window(&self, cfg: &ValidatedConfig<T>) -> (T, T) {
        let rho = cfg.tol.c1 * cfg.rho_eff();
        let eps = cfg.tol.eps;
        let eh2 = cfg.tol.eps_h * cfg.tol.eps_h;
        let half = T::lit(0.5);
        match cfg.mode {
            Mode::Stochastic => (
                (T::lit(6.0) * self.c_conc * rho * eps / eh2).sqrt(),
                T::lit(0.75),
            ),
            _ => {
                let root = (T::one() - T::lit(16.0) * rho * eps / eh2)
                    .max(T::zero())
                    .sqrt();
                let lo = (half - half * root).max(T::zero());
                let hi = (half + half * root).min(T::lit(1.5));
                (lo, hi)
            }
        }
    }

    /// Rejects a `c_h` outside its window or a non-positive decrease constant.
    pub fn validate(&self, cfg: &ValidatedConfig<T>) -> Result<()> {
        let (lo, hi) = self.window(cfg);
        let inside = match cfg.mode {
            Mode::Stochastic => self.c_h >= lo && self.c_h <= hi,
            _ => self.c_h > lo && self.c_h < hi,
        };
        let c_prime = match cfg.mode {
            Mode::Stochastic => self.c_prime_stoch(),
            _ => self.c_prime_det(),
        };
        let positive = c_prime > T::zero();
        if !inside || !positive {
            return Err(GoseError::StepWindow {
                c_h: self.c_h.as_f64(),
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        if !(self.c_conc > T::zero() && self.s_mult > T::zero() && self.conc_mult > T::zero()) {
            return Err(GoseError::NonPositiveConstant {
                name: "escape multiplier",
                value: self.s_mult.min(self.conc_mult).min(self.c_conc).as_f64(),
                expected: "> 0",
            });
        }
        Ok(())
    }

    /// Size of the gradient subsample drawn by [`one_step_stochastic`].
    pub fn subsample_size(&self, cfg: &ValidatedConfig<T>) -> usize {
        let log = (T::one() / cfg.tol.delta).ln();
        let curvature = self.s_mult * log / (cfg.tol.eps_h * cfg.tol.eps_h);
        let concentration = cfg.smooth.sigma.map(|s| {
            let ce = self.c_conc * cfg.tol.eps;
            self.conc_mult * s * s * log / (ce * ce)
        });
        let raw = match (self.subsample_rule, concentration) {
            (SubsampleRule::Curvature, _) | (SubsampleRule::Auto, None) => curvature,
            (SubsampleRule::Concentration, Some(c)) => c,
            (SubsampleRule::Concentration, None) => curvature,
            (SubsampleRule::Auto, Some(c)) => curvature.max(c),
        };
        raw.ceil().to_usize().unwrap_or(usize::MAX).max(1)
    }
}

/// `sign(-g'v) v` with `sign(0) = +1`, so that `g' v_out <= 0`.
pub fn adjust_direction<T: Scalar>(g: &[T], v_hat: &[T]) -> Vec<T> {
    if dot(g, v_hat) > T::zero() {
        v_hat.iter().map(|&v| -v).collect()
    } else {
        v_hat.to_vec()
    }
}

/// A single escape step.
#[derive(Debug, Clone, PartialEq)]
pub struct EscapeStep<T> {
    pub point: Vec<T>,
    /// Sign-adjusted unit direction `v~`.
    pub direction: Vec<T>,
    pub rayleigh: T,
    pub eta: T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EscapeResult<T> {
    Point(EscapeStep<T>),
    /// The finder certified (with probability `1 - delta`) that no curvature below `-eps_h` exists.
    Bottom {
        measured_rayleigh: T,
    },
}

impl<T> EscapeResult<T> {
    pub fn is_bottom(&self) -> bool {
        matches!(self, EscapeResult::Bottom { .. })
    }
}

pub fn nc_target<T: Scalar>(cfg: &ValidatedConfig<T>) -> NcTarget<T> {
    NcTarget {
        eps_h: cfg.tol.eps_h,
        delta: cfg.tol.delta,
        l: cfg.smooth.l,
    }
}

fn take_step<T, O>(
    eval: &mut Evaluator<'_, T, O>,
    x: &[T],
    g: &[T],
    nc: NcOutcome<T>,
    eta: T,
) -> EscapeResult<T>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    match nc.verdict {
        NcVerdict::Bottom => EscapeResult::Bottom {
            measured_rayleigh: nc.measured_rayleigh,
        },
        NcVerdict::Direction {
            direction,
            rayleigh,
        } => {
            let v = adjust_direction(g, &direction);
            let mut y = x.to_vec();
            axpy(eta, &v, &mut y);
            eval.counters_mut().escape_steps += 1;
            EscapeResult::Point(EscapeStep {
                point: y,
                direction: v,
                rayleigh,
                eta,
            })
        }
    }
}

/// Exact-gradient escape. `grad` must be `grad f(x)`, already computed by the caller,
/// so the only oracle cost is the negative-curvature search.
pub fn one_step_deterministic<T, O, R>(
    eval: &mut Evaluator<'_, T, O>,
    x: &[T],
    grad: &[T],
    cfg: &ValidatedConfig<T>,
    esc: &EscapeConfig<T>,
    nc: &NcConfig<T>,
    rng: &mut R,
) -> Result<EscapeResult<T>>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
    R: Rng + ?Sized,
{
    let outcome = approx_nc_deterministic(eval, x, &nc_target(cfg), nc, rng)?;
    Ok(take_step(eval, x, grad, outcome, esc.step_size(cfg)))
}

/// Subsampled escape: the direction's sign is chosen against the mean of
/// [`EscapeConfig::subsample_size`] fresh stochastic gradients, drawn only when the finder
/// returned a direction.
pub fn one_step_stochastic<T, O, R>(
    eval: &mut Evaluator<'_, T, O>,
    x: &[T],
    cfg: &ValidatedConfig<T>,
    esc: &EscapeConfig<T>,
    nc: &NcConfig<T>,
    rng: &mut R,
) -> Result<EscapeResult<T>>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
    R: Rng + ?Sized,
{
    if !eval.capabilities().stochastic {
        return Err(GoseError::NotStochastic);
    }
    let outcome = approx_nc_stochastic(eval, x, &nc_target(cfg), nc, rng)?;
    if outcome.is_bottom() {
        return Ok(take_step(eval, x, &[], outcome, T::zero()));
    }
    let keys: Vec<SampleKey> = (0..esc.subsample_size(cfg))
        .map(|_| SampleKey(rng.random()))
        .collect();
    let g_hat = eval.mean_sample_gradient(x, &keys);
    Ok(take_step(eval, x, &g_hat, outcome, esc.step_size(cfg)))
}

/// Finite-sum escape; `full_grad` is the full gradient at `x` computed by the caller.
pub fn one_step_finite_sum<T, O, R>(
    eval: &mut Evaluator<'_, T, O>,
    x: &[T],
    full_grad: &[T],
    cfg: &ValidatedConfig<T>,
    esc: &EscapeConfig<T>,
    nc: &NcConfig<T>,
    rng: &mut R,
) -> Result<EscapeResult<T>>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
    R: Rng + ?Sized,
{
    let outcome = approx_nc_finite_sum(eval, x, &nc_target(cfg), nc, rng)?;
    Ok(take_step(eval, x, full_grad, outcome, esc.step_size(cfg)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjust_flips_against_gradient() {
        assert_eq!(adjust_direction(&[1.0, 0.0], &[1.0, 0.0]), vec![-1.0, 0.0]);
        assert_eq!(adjust_direction(&[1.0, 0.0], &[0.0, 1.0]), vec![0.0, 1.0]);
        let s = 1.0 / 2f64.sqrt();
        assert_eq!(adjust_direction(&[-2.0, 1.0], &[s, s]), vec![s, s]);
    }

    #[test]
    fn decrease_constants_at_default() {
        let e = EscapeConfig::<f64>::default();
        assert!((e.c_prime_det() - 1.0 / 24.0).abs() < 1e-15);
        assert!((e.c_prime_stoch() - 1.0 / 48.0).abs() < 1e-15);
    }
}
