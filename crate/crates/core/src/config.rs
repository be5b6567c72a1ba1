use serde::{Deserialize, Serialize};

use crate::error::{GoseError, Result};
use crate::scalar::Scalar;

/// Problem access mode a driver runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Deterministic,
    Stochastic,
    FiniteSum,
}

/// Target accuracies and run controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct ToleranceConfig<T> {
    /// First-order tolerance on the gradient norm.
    pub eps: T,
    /// Second-order tolerance on the most negative Hessian eigenvalue.
    pub eps_h: T,
    /// Failure probability allotted to each randomized subroutine.
    pub delta: T,
    /// Overshoot factor applied to the Hessian-Lipschitz constant in the escape step.
    pub c1: T,
    /// Cap on outer iterations for every driver.
    pub max_outer: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for ToleranceConfig<T> {
    fn default() -> Self {
        Self {
            eps: T::lit(0.01),
            eps_h: T::lit(0.5),
            delta: T::lit(0.01),
            c1: T::one(),
            max_outer: 1000,
            seed: 0,
        }
    }
}

/// Smoothness constants of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct SmoothnessSpec<T> {
    /// Gradient-Lipschitz constant.
    pub l: T,
    /// Hessian-Lipschitz constant (0 for quadratics).
    pub rho: T,
    /// Floor applied to `rho` so the escape step stays finite.
    pub rho_min: T,
    pub delta_f: Option<T>,
    /// Uniform bound on stochastic-gradient variance, `2 sigma^2` for sub-Gaussian noise.
    pub h_star: Option<T>,
    pub sigma: Option<T>,
}

impl<T: Scalar> Default for SmoothnessSpec<T> {
    fn default() -> Self {
        Self {
            l: T::one(),
            rho: T::one(),
            rho_min: T::lit(1e-3),
            delta_f: None,
            h_star: None,
            sigma: None,
        }
    }
}

impl<T: Scalar> SmoothnessSpec<T> {
    pub fn rho_eff(&self) -> T {
        self.rho.max(self.rho_min)
    }

    /// Variance bound, falling back to `2 sigma^2` when only `sigma` is known.
    pub fn variance_bound(&self) -> Option<T> {
        self.h_star
            .or_else(|| self.sigma.map(|s| T::lit(2.0) * s * s))
    }
}

/// Configuration that passed [`validate_config`]. `smooth.rho` already holds `rho_eff`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ValidatedConfig<T> {
    pub tol: ToleranceConfig<T>,
    pub smooth: SmoothnessSpec<T>,
    pub mode: Mode,
}

impl<T: Scalar> ValidatedConfig<T> {
    pub fn rho_eff(&self) -> T {
        self.smooth.rho
    }

    /// `eps_h^2 / (16 c1 rho_eff)`, the exclusive upper bound on `eps`.
    pub fn eps_bound(&self) -> T {
        eps_bound(self.tol.eps_h, self.tol.c1, self.smooth.rho)
    }
}

fn eps_bound<T: Scalar>(eps_h: T, c1: T, rho: T) -> T {
    eps_h * eps_h / (T::lit(16.0) * c1 * rho)
}

fn check_open_unit<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    if v > T::zero() && v < T::one() {
        Ok(())
    } else {
        Err(GoseError::NonPositiveConstant {
            name,
            value: v.as_f64(),
            expected: "0 < value < 1",
        })
    }
}

fn check<T: Scalar>(name: &'static str, v: T, ok: bool, expected: &'static str) -> Result<()> {
    if ok && v.is_finite() {
        Ok(())
    } else {
        Err(GoseError::NonPositiveConstant {
            name,
            value: v.as_f64(),
            expected,
        })
    }
}

/// Checks ranges and the escape-step preconditions, freezing `rho_eff` into the result.
pub fn validate_config<T: Scalar>(
    tol: &ToleranceConfig<T>,
    smooth: &SmoothnessSpec<T>,
    mode: Mode,
) -> Result<ValidatedConfig<T>> {
    check_open_unit("eps", tol.eps)?;
    check_open_unit("eps_h", tol.eps_h)?;
    check_open_unit("delta", tol.delta)?;
    check("c1", tol.c1, tol.c1 >= T::one(), "c1 >= 1")?;
    if tol.max_outer == 0 {
        return Err(GoseError::NonPositiveConstant {
            name: "max_outer",
            value: 0.0,
            expected: "max_outer >= 1",
        });
    }
    check("l", smooth.l, smooth.l > T::zero(), "L > 0")?;
    check("rho", smooth.rho, smooth.rho >= T::zero(), "rho >= 0")?;
    check(
        "rho_min",
        smooth.rho_min,
        smooth.rho_min > T::zero(),
        "rho_min > 0",
    )?;
    if let Some(h) = smooth.h_star {
        check("h_star", h, h >= T::zero(), "h_star >= 0")?;
    }
    if let Some(s) = smooth.sigma {
        check("sigma", s, s >= T::zero(), "sigma >= 0")?;
    }
    if let Some(df) = smooth.delta_f {
        check("delta_f", df, df >= T::zero(), "delta_f >= 0")?;
    }

    if mode == Mode::Stochastic {
        let bound = tol.eps_h.powf(T::lit(1.5));
        if tol.eps > bound {
            return Err(GoseError::StochasticEpsilonTooLarge {
                eps: tol.eps.as_f64(),
                bound: bound.as_f64(),
            });
        }
    }

    let rho_eff = smooth.rho_eff();
    let bound = eps_bound(tol.eps_h, tol.c1, rho_eff);
    if tol.eps >= bound {
        return Err(GoseError::EpsilonTooLarge {
            eps: tol.eps.as_f64(),
            bound: bound.as_f64(),
        });
    }

    Ok(ValidatedConfig {
        tol: *tol,
        smooth: SmoothnessSpec {
            rho: rho_eff,
            ..*smooth
        },
        mode,
    })
}
