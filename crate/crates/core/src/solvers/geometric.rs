use rand::Rng;

use crate::error::{GoseError, Result};

/// Draws `T` with `P(T = k) = p^k (1 - p)` for `k = 0, 1, ..` as `floor(ln U / ln p)`.
/// The mean is `p / (1 - p)`.
pub fn sample_geometric<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<u64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(GoseError::InvalidP(p));
    }
    // 1 - [0, 1) lies in (0, 1], keeping ln finite
    let u = 1.0 - rng.random::<f64>();
    let t = (u.ln() / p.ln()).floor();
    Ok(if t >= u64::MAX as f64 {
        u64::MAX
    } else {
        t as u64
    })
}
