//! Miner expectations, collision estimates and pool shares.

use std::num::NonZeroU32;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::retarget::RetargetRule;
use crate::ledger::BlockHeader;
use crate::scalar::{rational_from_u128, Scalar};
use crate::Rational;

pub const SECONDS_PER_YEAR: u64 = 365 * 86_400;
pub const SECONDS_PER_WEEK: u64 = 7 * 86_400;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MiningError {
    #[error("hash share must lie in (0, 1]")]
    ShareOutOfRange,
    #[error("hash rate must be positive")]
    ZeroRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinerExpectation<T> {
    pub expected_blocks: T,
    pub expected_weeks: T,
}

/// Expected blocks until a miner with `hash_share` of the network finds one,
/// and the wall-clock weeks that takes at the rule's target interval.
pub fn mining_expectation<T: Scalar>(hash_share: &T, rule: &RetargetRule) -> Result<MinerExpectation<T>, MiningError> {
    if *hash_share <= T::zero() || *hash_share > T::one() {
        return Err(MiningError::ShareOutOfRange);
    }
    let blocks = T::one() / hash_share.clone();
    let secs_per_week = Rational::new(
        BigInt::from(rule.target_block_interval_secs),
        BigInt::from(SECONDS_PER_WEEK),
    );
    let weeks = blocks.clone() * T::from_rational(&secs_per_week);
    Ok(MinerExpectation { expected_blocks: blocks, expected_weeks: weeks })
}

/// Years needed to brute-force a 128-bit collision at `hash_rate_per_second`.
/// Evaluated exactly, then converted.
pub fn collision_time_years<T: Scalar>(hash_rate_per_second: u128) -> Result<T, MiningError> {
    if hash_rate_per_second == 0 {
        return Err(MiningError::ZeroRate);
    }
    let space = Rational::from_integer(BigInt::one() << 128);
    let per_year = rational_from_u128(hash_rate_per_second) * Rational::from_integer(BigInt::from(SECONDS_PER_YEAR));
    Ok(T::from_rational(&(space / per_year)))
}

/// A pool share: the header hash is below `k × network_target`. With `k = 1`
/// this is exactly a valid block.
pub fn pool_share_valid(header: &BlockHeader, network_target: &BigUint, k: NonZeroU32) -> bool {
    header.hash_value() < network_target * BigUint::from(k.get())
}

/// Exact expected blocks as a rational, for callers that want no rounding.
pub fn expected_blocks_exact(hash_share: &Rational) -> Result<Rational, MiningError> {
    if hash_share.is_zero() || *hash_share < Rational::zero() || *hash_share > Rational::one() {
        return Err(MiningError::ShareOutOfRange);
    }
    Ok(hash_share.recip())
}
