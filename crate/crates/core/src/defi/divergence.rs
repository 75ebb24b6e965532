//! Divergence ("impermanent") loss of a full-range LP position.

use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("price ratio must be positive and finite")]
pub struct DivergenceError;

/// `2√p / (1 + p) − 1` for price ratio `p` (now over at-deposit). Always ≤ 0.
pub fn divergence_loss<T: Float>(p: T) -> Result<T, DivergenceError> {
    if p.is_nan() || p <= T::zero() || !p.is_finite() {
        return Err(DivergenceError);
    }
    let two = T::one() + T::one();
    Ok(two * p.sqrt() / (T::one() + p) - T::one())
}
