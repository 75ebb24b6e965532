//! Block subsidy halving schedule.

use serde::{Deserialize, Serialize};

use crate::amount::Amount;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardSchedule {
    pub initial_subsidy: Amount,
    pub halving_interval_blocks: u64,
    pub supply_cap: Amount,
}

impl Default for RewardSchedule {
    /// 50 BTC halving every 210,000 blocks under a 21,000,000 BTC cap.
    fn default() -> Self {
        RewardSchedule {
            initial_subsidy: Amount::sats(50 * 100_000_000),
            halving_interval_blocks: 210_000,
            supply_cap: Amount::sats(21_000_000 * 100_000_000),
        }
    }
}

impl RewardSchedule {
    /// Number of halving eras with a non-zero subsidy.
    pub fn era_count(&self) -> u32 {
        let base = self.initial_subsidy.base_units();
        if base == 0 {
            0
        } else {
            128 - base.leading_zeros()
        }
    }

    /// Sum of every block subsidy ever paid. `None` on overflow.
    pub fn total_issuance(&self) -> Option<Amount> {
        let base = self.initial_subsidy.base_units();
        let interval = self.halving_interval_blocks as u128;
        let mut total: u128 = 0;
        for era in 0..self.era_count() {
            total = total.checked_add((base >> era).checked_mul(interval)?)?;
        }
        Some(Amount::new(total, self.initial_subsidy.decimals()))
    }
}

/// Initial subsidy halved `floor(height / interval)` times, truncated to
/// whole base units at each halving (a right shift).
pub fn block_subsidy(height: u64, schedule: &RewardSchedule) -> Amount {
    let decimals = schedule.initial_subsidy.decimals();
    if schedule.halving_interval_blocks == 0 {
        return Amount::zero(decimals);
    }
    let halvings = height / schedule.halving_interval_blocks;
    let base = schedule.initial_subsidy.base_units();
    let value = if halvings >= 128 { 0 } else { base >> halvings };
    Amount::new(value, decimals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halving_points() {
        let s = RewardSchedule::default();
        assert_eq!(block_subsidy(0, &s), Amount::whole(50, 8).unwrap());
        assert_eq!(block_subsidy(209_999, &s), Amount::whole(50, 8).unwrap());
        assert_eq!(block_subsidy(210_000, &s), Amount::whole(25, 8).unwrap());
        assert_eq!(block_subsidy(420_000, &s).to_string(), "12.5");
        assert_eq!(block_subsidy(64 * 210_000, &s), Amount::sats(0));
    }

    #[test]
    fn total_issuance_stays_under_cap() {
        let s = RewardSchedule::default();
        assert_eq!(s.era_count(), 33);
        let total = s.total_issuance().unwrap();
        assert!(total.base_units() <= s.supply_cap.base_units());
        // Independent tally: Σ 210000 × floor(5e9 / 2^i), computed in Python.
        assert_eq!(total.base_units(), 2_099_999_997_690_000);
    }
}
