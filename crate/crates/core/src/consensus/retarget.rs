//! Difficulty retargeting.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetargetRule {
    pub window_blocks: u64,
    pub target_block_interval_secs: u64,
    /// The new target stays within `[old / clamp, old × clamp]`.
    #[serde(with = "crate::scalar::serde_rational")]
    pub clamp_factor: Rational,
}

impl Default for RetargetRule {
    fn default() -> Self {
        RetargetRule {
            window_blocks: 2016,
            target_block_interval_secs: 600,
            clamp_factor: Rational::from_integer(BigInt::from(4)),
        }
    }
}

impl RetargetRule {
    pub fn expected_timespan_secs(&self) -> u64 {
        self.window_blocks * self.target_block_interval_secs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RetargetError {
    #[error("actual timespan must be positive, got {0}")]
    NonPositiveTimespan(i64),
    #[error("invalid retarget rule: {0}")]
    InvalidRule(&'static str),
}

/// `old × actual / expected`, clamped. A lower target means higher difficulty.
pub fn retarget_difficulty(
    old_target: &BigUint,
    actual_timespan_secs: i64,
    rule: &RetargetRule,
) -> Result<BigUint, RetargetError> {
    if actual_timespan_secs <= 0 {
        return Err(RetargetError::NonPositiveTimespan(actual_timespan_secs));
    }
    if rule.window_blocks == 0 || rule.target_block_interval_secs == 0 {
        return Err(RetargetError::InvalidRule("window and interval must be positive"));
    }
    if rule.clamp_factor < Rational::one() || !rule.clamp_factor.is_positive() {
        return Err(RetargetError::InvalidRule("clamp factor must be >= 1"));
    }
    let unclamped = old_target * BigUint::from(actual_timespan_secs as u64) / BigUint::from(rule.expected_timespan_secs());
    let num = rule.clamp_factor.numer().magnitude();
    let den = rule.clamp_factor.denom().magnitude();
    let upper = old_target * num / den;
    let lower = old_target * den / num;
    Ok(unclamped.clamp(lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn equilibrium_and_ratio() {
        let rule = RetargetRule::default();
        let expected = rule.expected_timespan_secs() as i64;
        let old = t(1_000_000_000);
        assert_eq!(retarget_difficulty(&old, expected, &rule).unwrap(), old);
        assert_eq!(retarget_difficulty(&old, expected / 2, &rule).unwrap(), t(500_000_000));
        assert_eq!(retarget_difficulty(&old, expected * 2, &rule).unwrap(), t(2_000_000_000));
    }

    #[test]
    fn clamp_binds() {
        let rule = RetargetRule::default();
        let expected = rule.expected_timespan_secs() as i64;
        let old = t(1_000_000_000);
        assert_eq!(retarget_difficulty(&old, expected / 100, &rule).unwrap(), t(250_000_000));
        assert_eq!(retarget_difficulty(&old, expected * 100, &rule).unwrap(), t(4_000_000_000));
    }

    #[test]
    fn rejects_bad_input() {
        let rule = RetargetRule::default();
        assert_eq!(
            retarget_difficulty(&t(1), 0, &rule),
            Err(RetargetError::NonPositiveTimespan(0))
        );
        let mut bad = rule.clone();
        bad.clamp_factor = Rational::new(BigInt::from(1), BigInt::from(2));
        assert!(retarget_difficulty(&t(1), 10, &bad).is_err());
    }
}
