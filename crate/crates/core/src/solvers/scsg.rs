use rand::Rng;

use crate::config::{Mode, ValidatedConfig};
use crate::error::{GoseError, Result};
use crate::linalg::{accumulate, axpy, dot, scale, sub};
use crate::oracle::{Evaluator, Objective, SampleKey};
use crate::scalar::Scalar;

use super::geometric::sample_geometric;

/// Hidden-constant multipliers of the stochastic batch rules.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ScsgMults {
    pub b_mult: f64,
    pub big_b_mult: f64,
}

impl Default for ScsgMults {
    fn default() -> Self {
        Self {
            b_mult: 1.0,
            big_b_mult: 96.0,
        }
    }
}

/// Parameters of one SCSG epoch.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScsgConfig<T> {
    /// Anchor batch size `B`.
    pub batch: usize,
    /// Inner minibatch size `b`.
    pub minibatch: usize,
    pub eta: T,
    /// Geometric parameter `B / (B + b)` of the epoch length.
    pub p: f64,
    /// Set when the rules asked for `b >= B`, in which case SCSG reduces to minibatch SGD.
    pub degenerate: bool,
}

impl<T: Scalar> ScsgConfig<T> {
    fn from_sizes(batch: usize, minibatch: usize, eta: T, degenerate: bool) -> Self {
        Self {
            batch,
            minibatch,
            eta,
            p: batch as f64 / (batch + minibatch) as f64,
            degenerate,
        }
    }

    /// Expected number of inner steps, `B / b`.
    pub fn mean_epoch_length(&self) -> f64 {
        self.p / (1.0 - self.p)
    }
}

fn ceil_usize(x: f64) -> usize {
    if x.is_finite() && x < usize::MAX as f64 {
        x.ceil().max(1.0) as usize
    } else {
        usize::MAX
    }
}

/// Batch sizes and step size for the stochastic or finite-sum driver.
///
/// Stochastic: `B = ceil(big_b_mult H* ln(1/delta) / eps^2)`,
/// `b = clamp(ceil(b_mult rho^6 H* eps^4 / (L^3 eps_h^9)), 1, B)`, `eta = b^{2/3} / (6 L B^{2/3})`,
/// with `H*` from [`SmoothnessSpec`](crate::SmoothnessSpec) or, failing that, `pilot_h_star`.
/// Finite sum: `B = n`, `b = 1`, `eta = 1 / (L n^{2/3})`.
pub fn derive_scsg_params<T: Scalar>(
    cfg: &ValidatedConfig<T>,
    n: usize,
    mults: &ScsgMults,
    pilot_h_star: Option<T>,
) -> Result<ScsgConfig<T>> {
    let l = cfg.smooth.l.as_f64();
    match cfg.mode {
        Mode::Stochastic => {
            let h = cfg
                .smooth
                .variance_bound()
                .or(pilot_h_star)
                .ok_or(GoseError::MissingVarianceBound)?
                .as_f64();
            let eps = cfg.tol.eps.as_f64();
            let eps_h = cfg.tol.eps_h.as_f64();
            let rho = cfg.rho_eff().as_f64();
            let log = (1.0 / cfg.tol.delta.as_f64()).ln();
            let batch = ceil_usize(mults.big_b_mult * h * log / (eps * eps));
            let raw_b = mults.b_mult * rho.powi(6) * h * eps.powi(4) / (l.powi(3) * eps_h.powi(9));
            let want = ceil_usize(raw_b);
            let minibatch = want.clamp(1, batch);
            let eta =
                (minibatch as f64).powf(2.0 / 3.0) / (6.0 * l * (batch as f64).powf(2.0 / 3.0));
            Ok(ScsgConfig::from_sizes(
                batch,
                minibatch,
                T::lit(eta),
                want >= batch,
            ))
        }
        Mode::FiniteSum | Mode::Deterministic => {
            if n == 0 {
                return Err(GoseError::NotFiniteSum);
            }
            let eta = 1.0 / (l * (n as f64).powf(2.0 / 3.0));
            Ok(ScsgConfig::from_sizes(n, 1, T::lit(eta), n == 1))
        }
    }
}

/// Twice the empirical variance `mean |g_i - g_bar|^2` of `samples` stochastic gradients at `x`.
/// Charges `samples` stochastic gradients.
pub fn pilot_variance<T, O, R>(
    eval: &mut Evaluator<'_, T, O>,
    x: &[T],
    samples: usize,
    rng: &mut R,
) -> Result<T>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
    R: Rng + ?Sized,
{
    if !eval.capabilities().stochastic {
        return Err(GoseError::NotStochastic);
    }
    let draws: Vec<Vec<T>> = (0..samples.max(2))
        .map(|_| eval.sample_gradient(x, SampleKey(rng.random())))
        .collect();
    let mut mean = vec![T::zero(); x.len()];
    for g in &draws {
        accumulate(&mut mean, g);
    }
    let k = T::from_count(draws.len());
    scale(T::one() / k, &mut mean);
    let var = draws
        .iter()
        .map(|g| {
            let r = sub(g, &mean);
            dot(&r, &r)
        })
        .sum::<T>()
        / (k - T::one());
    Ok(T::lit(2.0) * var)
}

/// Where the inner minibatches come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScsgSource {
    /// Fresh stochastic samples.
    Stochastic,
    /// Component indices drawn uniformly with replacement.
    FiniteSum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochOutcome<T> {
    pub point: Vec<T>,
    /// Number of inner steps `T`.
    pub steps: u64,
}

/// One SCSG epoch from `x0` anchored at the batch gradient `g_anchor`:
/// `y_t = y_{t-1} - eta (grad f_I(y_{t-1}) - grad f_I(y_0) + g_anchor)` for `t = 1..T`,
/// `T ~ Geom(B / (B + b))`, each step with a fresh minibatch `I` of size `b` evaluated at
/// both points. Charges `2 b T` stochastic or component gradients.
pub fn scsg_epoch<T, O, R>(
    eval: &mut Evaluator<'_, T, O>,
    x0: &[T],
    g_anchor: &[T],
    cfg: &ScsgConfig<T>,
    source: ScsgSource,
    rng: &mut R,
) -> Result<EpochOutcome<T>>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
    R: Rng + ?Sized,
{
    let steps = sample_geometric(cfg.p, rng)?;
    scsg_epoch_fixed(eval, x0, g_anchor, cfg, source, steps, rng)
}

/// [`scsg_epoch`] with a prescribed number of inner steps.
pub fn scsg_epoch_fixed<T, O, R>(
    eval: &mut Evaluator<'_, T, O>,
    x0: &[T],
    g_anchor: &[T],
    cfg: &ScsgConfig<T>,
    source: ScsgSource,
    steps: u64,
    rng: &mut R,
) -> Result<EpochOutcome<T>>
where
    T: Scalar,
    O: Objective<T> + ?Sized,
    R: Rng + ?Sized,
{
    let n = eval.oracle().n_components();
    match source {
        ScsgSource::Stochastic if !eval.capabilities().stochastic => {
            return Err(GoseError::NotStochastic)
        }
        ScsgSource::FiniteSum if !eval.capabilities().finite_sum || n == 0 => {
            return Err(GoseError::NotFiniteSum)
        }
        _ => {}
    }
    let b = cfg.minibatch.max(1);
    let mut y = x0.to_vec();
    for _ in 0..steps {
        let (g_here, g_anchor_pt) = match source {
            ScsgSource::Stochastic => {
                let keys: Vec<SampleKey> = (0..b).map(|_| SampleKey(rng.random())).collect();
                (
                    eval.mean_sample_gradient(&y, &keys),
                    eval.mean_sample_gradient(x0, &keys),
                )
            }
            ScsgSource::FiniteSum => {
                let idx: Vec<usize> = (0..b).map(|_| rng.random_range(0..n)).collect();
                (
                    eval.mean_component_gradient(&y, &idx),
                    eval.mean_component_gradient(x0, &idx),
                )
            }
        };
        let mut dir = sub(&g_here, &g_anchor_pt);
        accumulate(&mut dir, g_anchor);
        axpy(-cfg.eta, &dir, &mut y);
    }
    Ok(EpochOutcome { point: y, steps })
}
