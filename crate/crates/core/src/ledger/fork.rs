//! Hard-fork balance duplication.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::amount::{Amount, AmountError};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForkSpec {
    pub fork_height: u64,
    pub parent_asset: String,
    pub child_asset: String,
    /// Child units credited per parent unit.
    #[serde(with = "crate::scalar::serde_rational")]
    pub ratio: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ForkError {
    #[error("fork height must be positive")]
    ZeroHeight,
    #[error("fork ratio must be positive")]
    NonPositiveRatio,
    #[error(transparent)]
    Amount(#[from] AmountError),
}

impl ForkSpec {
    /// One-for-one fork at `fork_height`.
    pub fn one_to_one(fork_height: u64, parent: &str, child: &str) -> Self {
        ForkSpec {
            fork_height,
            parent_asset: parent.into(),
            child_asset: child.into(),
            ratio: Rational::one(),
        }
    }

    /// Height at which the holdings snapshot must be taken.
    pub fn snapshot_height(&self) -> u64 {
        self.fork_height.saturating_sub(1)
    }

    pub fn validate(&self) -> Result<(), ForkError> {
        if self.fork_height == 0 {
            return Err(ForkError::ZeroHeight);
        }
        if !self.ratio.is_positive() || self.ratio.is_zero() {
            return Err(ForkError::NonPositiveRatio);
        }
        Ok(())
    }
}

/// Credits every holder `ratio × balance` of the child asset (rounded down to
/// a base unit). Parent balances are not touched.
pub fn apply_hard_fork<K: Ord + Clone>(
    holdings: &BTreeMap<K, Amount>,
    spec: &ForkSpec,
) -> Result<BTreeMap<K, Amount>, ForkError> {
    spec.validate()?;
    holdings
        .iter()
        .map(|(holder, bal)| Ok((holder.clone(), bal.mul_floor(&spec.ratio)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn one_to_one_duplication() {
        let mut h = BTreeMap::new();
        h.insert("3FGs7JfaoAZTT6Sda73XrJ6i5Gwsuw9GUC".to_string(), Amount::whole(8, 8).unwrap());
        let spec = ForkSpec::one_to_one(478_558, "BTC", "BCH");
        assert_eq!(spec.snapshot_height(), 478_557);
        let child = apply_hard_fork(&h, &spec).unwrap();
        assert_eq!(child, h);
    }

    #[test]
    fn ratio_and_empty() {
        let mut spec = ForkSpec::one_to_one(10, "A", "B");
        spec.ratio = Rational::from_integer(BigInt::from(2));
        let mut h = BTreeMap::new();
        h.insert(1u32, Amount::whole(3, 8).unwrap());
        assert_eq!(apply_hard_fork(&h, &spec).unwrap()[&1], Amount::whole(6, 8).unwrap());
        assert!(apply_hard_fork(&BTreeMap::<u32, Amount>::new(), &spec).unwrap().is_empty());
    }

    #[test]
    fn invalid_specs() {
        let mut spec = ForkSpec::one_to_one(0, "A", "B");
        assert_eq!(spec.validate(), Err(ForkError::ZeroHeight));
        spec.fork_height = 1;
        spec.ratio = Rational::zero();
        assert_eq!(spec.validate(), Err(ForkError::NonPositiveRatio));
    }
}
