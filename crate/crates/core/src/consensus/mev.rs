//! MEV payment accounting from the builder's point of view.

use serde::{Deserialize, Serialize};

use crate::amount::{Amount, AmountError, SignedAmount};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MevBlockAccounting {
    pub block_reward_to_builder: Amount,
    pub searcher_payments: Vec<Amount>,
    pub proposer_payout: Amount,
}

/// `block_reward + Σ searcher_payments − proposer_payout`. Negative when the
/// builder pays the proposer more than it collects.
pub fn mev_net_builder_fee(acc: &MevBlockAccounting) -> Result<SignedAmount, AmountError> {
    let decimals = acc.block_reward_to_builder.decimals();
    let inflow = Amount::checked_sum(
        std::iter::once(&acc.block_reward_to_builder).chain(acc.searcher_payments.iter()),
        decimals,
    )?;
    if acc.proposer_payout.decimals() != decimals {
        return Err(AmountError::DecimalsMismatch(decimals, acc.proposer_payout.decimals()));
    }
    inflow.to_signed()?.checked_sub(&acc.proposer_payout.to_signed()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eth(s: &str) -> Amount {
        Amount::from_decimal_str(s, 18).unwrap()
    }

    #[test]
    fn worked_example_full_wei() {
        let acc = MevBlockAccounting {
            block_reward_to_builder: eth("0.03197108522771121"),
            searcher_payments: vec![eth("0.01318040562286369"), eth("0.03216687894283185")],
            proposer_payout: eth("0.063398167586139473"),
        };
        assert_eq!(mev_net_builder_fee(&acc).unwrap().to_string(), "0.013920202207267277");
    }

    #[test]
    fn trivial_cases() {
        let x = eth("1.5");
        let only_reward = MevBlockAccounting {
            block_reward_to_builder: x,
            searcher_payments: vec![],
            proposer_payout: Amount::wei(0),
        };
        assert_eq!(mev_net_builder_fee(&only_reward).unwrap(), x.to_signed().unwrap());
        let discount = MevBlockAccounting {
            block_reward_to_builder: Amount::wei(0),
            searcher_payments: vec![],
            proposer_payout: eth("0.25"),
        };
        assert_eq!(mev_net_builder_fee(&discount).unwrap().to_string(), "-0.25");
    }
}
