use serde::{Deserialize, Serialize};

use crate::linalg::{axpy, dot, norm, sub};
use crate::oracle::{Evaluator, Objective};
use crate::scalar::Scalar;

/// Large-gradient solver used by the deterministic driver.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    #[default]
    Gd,
    Agd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderOutcome<T> {
    pub point: Vec<T>,
    /// Gradient at `point`.
    pub grad: Vec<T>,
    pub grad_norm: T,
    pub iters: usize,
    /// `max_iters` ran out before `|grad| <= eps`.
    pub exhausted: bool,
}

fn initial_gradient<T, O>(eval: &mut Evaluator<'_, T, O>, x0: &[T], g0: Option<Vec<T>>) -> Vec<T>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    g0.unwrap_or_else(|| eval.gradient(x0))
}

/// Gradient descent with step `1/L` until `|grad f| <= eps` or `max_iters` steps.
///
/// Pass the gradient at `x0` as `g0` when it is already known; otherwise it is computed.
/// Each step costs one gradient evaluation.
pub fn gd_to_stationarity<T, O>(
    eval: &mut Evaluator<'_, T, O>,
    x0: &[T],
    l: T,
    eps: T,
    max_iters: usize,
    g0: Option<Vec<T>>,
) -> FirstOrderOutcome<T>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    let step = T::one() / l;
    let mut x = x0.to_vec();
    let mut g = initial_gradient(eval, x0, g0);
    let mut iters = 0;
    loop {
        let gn = norm(&g);
        if gn <= eps || iters >= max_iters {
            return FirstOrderOutcome {
                point: x,
                grad: g,
                grad_norm: gn,
                iters,
                exhausted: gn > eps,
            };
        }
        axpy(-step, &g, &mut x);
        g = eval.gradient(&x);
        iters += 1;
    }
}

/// Restarted Nesterov descent with two guards.
///
/// * Monotone restart: a momentum step that raises `f` is discarded and replaced by a
///   plain `1/L` step from the last accepted iterate, so accepted values never increase.
/// * Curvature guard: when the secant curvature between consecutive extrapolation points
///   drops below `-2 sqrt(rho * eps)`, momentum is reset.
///
/// Returns a point with `|grad f| <= eps` and `f <= f(x0)`, or the last accepted iterate
/// flagged as exhausted. Costs one gradient and one function value per iteration.
pub fn guarded_agd<T, O>(
    eval: &mut Evaluator<'_, T, O>,
    x0: &[T],
    l: T,
    rho: T,
    eps: T,
    max_iters: usize,
    g0: Option<Vec<T>>,
) -> FirstOrderOutcome<T>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
{
    let step = T::one() / l;
    let curvature_floor = -T::lit(2.0) * (rho * eps).sqrt();
    let f0 = eval.value(x0);
    let mut x = x0.to_vec();
    let mut fx = f0;
    let mut y = x0.to_vec();
    let mut g = initial_gradient(eval, x0, g0);
    // y coincides with x whenever momentum is zero
    let mut y_is_x = true;
    let mut k = 0usize;
    let mut iters = 0usize;

    loop {
        let gn = norm(&g);
        if gn <= eps {
            if y_is_x || eval.value(&y) <= f0 {
                return FirstOrderOutcome {
                    point: y,
                    grad: g,
                    grad_norm: gn,
                    iters,
                    exhausted: false,
                };
            }
            y = x.clone();
            y_is_x = true;
            k = 0;
            g = eval.gradient(&y);
            iters += 1;
            continue;
        }
        if iters >= max_iters {
            if !y_is_x {
                g = eval.gradient(&x);
            }
            let gn = norm(&g);
            return FirstOrderOutcome {
                point: x,
                grad: g,
                grad_norm: gn,
                iters,
                exhausted: gn > eps,
            };
        }

        let mut x_new = y.clone();
        axpy(-step, &g, &mut x_new);
        let f_new = eval.value(&x_new);
        if f_new > fx && !y_is_x {
            y = x.clone();
            y_is_x = true;
            k = 0;
            g = eval.gradient(&y);
            iters += 1;
            continue;
        }

        let beta = T::from_count(k) / T::from_count(k + 3);
        let mut y_new = x_new.clone();
        axpy(beta, &sub(&x_new, &x), &mut y_new);
        x = x_new;
        fx = f_new;
        k += 1;
        let mut g_new = eval.gradient(&y_new);
        iters += 1;
        let mut new_is_x = beta == T::zero();

        let dy = sub(&y_new, &y);
        let dy2 = dot(&dy, &dy);
        if dy2 > T::zero() {
            let curvature = dot(&sub(&g_new, &g), &dy) / dy2;
            if curvature < curvature_floor && !new_is_x {
                y_new = x.clone();
                g_new = eval.gradient(&y_new);
                iters += 1;
                k = 0;
                new_is_x = true;
            }
        }
        y = y_new;
        g = g_new;
        y_is_x = new_is_x;
    }
}
