//! Collateralized debt vaults: borrowing limit, stability fee and liquidation.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::amount::{Amount, AmountError};
use crate::scalar::{ceil_to_u128, exp_rational, floor_to_u128};
use crate::tax::{ChainEventRecord, EventKind};
use crate::Rational;

const SECONDS_PER_YEAR: i64 = 365 * 86_400;
const EXP_DIGITS: u32 = 40;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VaultError {
    #[error("time went backwards: {now} < {last}")]
    TimeRegression { now: i64, last: i64 },
    #[error("price must be positive")]
    BadPrice,
    #[error("liquidation ratio must exceed 1")]
    BadRatio,
    #[error("penalty rate must be non-negative")]
    BadPenalty,
    #[error("vault {0} is not liquidatable")]
    Healthy(String),
    #[error(transparent)]
    Amount(#[from] AmountError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceQuote {
    pub asset: String,
    #[serde(with = "crate::scalar::serde_rational")]
    pub unit_price: Rational,
    pub timestamp: i64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compounding {
    Simple,
    #[default]
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vault {
    pub id: String,
    pub collateral_asset: String,
    pub collateral_amount: Amount,
    pub debt: Amount,
    /// 1.5 for ETH-like collateral, 1.75 for BAT-like.
    #[serde(with = "crate::scalar::serde_rational")]
    pub liquidation_ratio: Rational,
    /// Annual rate.
    #[serde(with = "crate::scalar::serde_rational")]
    pub stability_fee_rate: Rational,
    pub last_accrual: i64,
    #[serde(default)]
    pub compounding: Compounding,
}

impl Vault {
    pub fn collateral_value(&self, price: &Rational) -> Rational {
        self.collateral_amount.to_rational() * price
    }

    /// Strictly below `ratio × debt`; exactly at the ratio is safe.
    pub fn is_liquidatable(&self, price: &Rational) -> bool {
        self.debt.base_units() > 0 && self.collateral_value(price) < &self.liquidation_ratio * self.debt.to_rational()
    }
}

/// `collateral × price / ratio`, rounded down to a debt base unit.
pub fn vault_max_debt(
    collateral: &Amount,
    price: &Rational,
    liquidation_ratio: &Rational,
    debt_decimals: u8,
) -> Result<Amount, VaultError> {
    if price.is_negative() {
        return Err(VaultError::BadPrice);
    }
    if *liquidation_ratio <= Rational::one() {
        return Err(VaultError::BadRatio);
    }
    Ok(Amount::from_rational_floor(&(collateral.to_rational() * price / liquidation_ratio), debt_decimals)?)
}

/// Accrues the stability fee up to `now` (new debt rounded up to a base
/// unit) and reports whether the vault may be liquidated at `price`.
pub fn vault_accrue_and_check(vault: &Vault, now: i64, price: &Rational) -> Result<(Vault, bool), VaultError> {
    if now < vault.last_accrual {
        return Err(VaultError::TimeRegression { now, last: vault.last_accrual });
    }
    if !price.is_positive() {
        return Err(VaultError::BadPrice);
    }
    let mut out = vault.clone();
    let elapsed = now - vault.last_accrual;
    if elapsed > 0 && !vault.debt.base_units().is_zero() {
        let t = Rational::new(BigInt::from(elapsed), BigInt::from(SECONDS_PER_YEAR));
        let rt = &vault.stability_fee_rate * t;
        let factor = match vault.compounding {
            Compounding::Simple => Rational::one() + rt,
            Compounding::Continuous => exp_rational(&rt, EXP_DIGITS),
        };
        let grown = vault.debt.base_rational() * factor;
        out.debt = Amount::new(ceil_to_u128(&grown).ok_or(AmountError::Overflow)?, vault.debt.decimals());
    }
    out.last_accrual = now;
    let flag = out.is_liquidatable(price);
    Ok((out, flag))
}

/// Result of a liquidation. Values are in the debt's reference currency and
/// satisfy `debt_repaid + penalty + returned_value = collateral value`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Liquidation {
    #[serde(with = "crate::scalar::serde_rational")]
    pub debt_repaid: Rational,
    #[serde(with = "crate::scalar::serde_rational")]
    pub penalty: Rational,
    #[serde(with = "crate::scalar::serde_rational")]
    pub returned_value: Rational,
    /// Debt left uncovered; becomes protocol debt.
    #[serde(with = "crate::scalar::serde_rational")]
    pub shortfall: Rational,
    pub collateral_sold: Amount,
    pub collateral_returned: Amount,
    pub closed: Vault,
}

impl Liquidation {
    /// The borrower's disposal of the sold collateral.
    pub fn events(&self, vault: &Vault, price: &Rational, seq: u64, timestamp: i64) -> Vec<ChainEventRecord> {
        if self.collateral_sold.base_units() == 0 {
            return Vec::new();
        }
        vec![ChainEventRecord::new(
            seq,
            timestamp,
            EventKind::VaultLiquidation,
            &vault.collateral_asset,
            self.collateral_sold,
            price.clone(),
        )
        .with_meta("vault", vault.id.clone())
        .with_meta("penalty", crate::scalar::format_exact(&self.penalty))]
    }
}

/// Sells collateral at `price` to repay the debt, charges
/// `penalty_rate × debt` out of what is left and returns the rest.
pub fn liquidate_vault(vault: &Vault, price: &Rational, penalty_rate: &Rational) -> Result<Liquidation, VaultError> {
    if !price.is_positive() {
        return Err(VaultError::BadPrice);
    }
    if penalty_rate.is_negative() {
        return Err(VaultError::BadPenalty);
    }
    if !vault.is_liquidatable(price) {
        return Err(VaultError::Healthy(vault.id.clone()));
    }
    let value = vault.collateral_value(price);
    let debt = vault.debt.to_rational();
    let debt_repaid = if debt < value { debt.clone() } else { value.clone() };
    let shortfall = &debt - &debt_repaid;
    let after_debt = &value - &debt_repaid;
    let full_penalty = penalty_rate * &debt;
    let penalty = if full_penalty < after_debt { full_penalty } else { after_debt.clone() };
    let returned_value = after_debt - &penalty;

    let decimals = vault.collateral_amount.decimals();
    let returned_units = returned_value.clone() / price * Rational::from_integer(crate::scalar::pow10(decimals as u32));
    let collateral_returned = Amount::new(floor_to_u128(&returned_units).ok_or(AmountError::Overflow)?, decimals);
    let collateral_sold = vault.collateral_amount.checked_sub(&collateral_returned)?;

    let mut closed = vault.clone();
    closed.collateral_amount = Amount::zero(decimals);
    closed.debt = Amount::zero(vault.debt.decimals());
    Ok(Liquidation { debt_repaid, penalty, returned_value, shortfall, collateral_sold, collateral_returned, closed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::parse_rational;

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn vault(collateral: u128, debt: u128, ratio: &str) -> Vault {
        Vault {
            id: "v1".into(),
            collateral_asset: "ETH".into(),
            collateral_amount: Amount::whole(collateral, 18).unwrap(),
            debt: Amount::whole(debt, 18).unwrap(),
            liquidation_ratio: q(ratio),
            stability_fee_rate: q("0.05"),
            last_accrual: 0,
            compounding: Compounding::Continuous,
        }
    }

    #[test]
    fn max_debt() {
        let c = Amount::whole(15, 18).unwrap();
        assert_eq!(vault_max_debt(&c, &q("100"), &q("1.5"), 18).unwrap(), Amount::whole(1000, 18).unwrap());
        // floor(1500 / 1.75 × 1e18)
        assert_eq!(
            vault_max_debt(&c, &q("100"), &q("1.75"), 18).unwrap().base_units(),
            857_142_857_142_857_142_857
        );
        assert_eq!(vault_max_debt(&Amount::zero(18), &q("100"), &q("1.5"), 18).unwrap(), Amount::zero(18));
        assert_eq!(vault_max_debt(&c, &q("100"), &q("1"), 18), Err(VaultError::BadRatio));
    }

    #[test]
    fn flag_boundary() {
        let v = vault(14, 1000, "1.5");
        assert!(vault_accrue_and_check(&v, 0, &q("100")).unwrap().1);
        let v = vault(15, 1000, "1.5");
        let (same, flag) = vault_accrue_and_check(&v, 0, &q("100")).unwrap();
        assert!(!flag);
        assert_eq!(same.debt, v.debt);
        assert!(matches!(vault_accrue_and_check(&same, -1, &q("1")), Err(VaultError::TimeRegression { .. })));
    }

    #[test]
    fn fee_accrual() {
        let mut v = vault(100, 1000, "1.5");
        v.compounding = Compounding::Simple;
        let (a, _) = vault_accrue_and_check(&v, SECONDS_PER_YEAR, &q("100")).unwrap();
        assert_eq!(a.debt, Amount::whole(1050, 18).unwrap());
        v.compounding = Compounding::Continuous;
        let (c, _) = vault_accrue_and_check(&v, SECONDS_PER_YEAR, &q("100")).unwrap();
        // ceil(1000e18 × e^0.05)
        assert_eq!(c.debt.base_units(), 1_051_271_096_376_024_039_698);
    }

    #[test]
    fn liquidation_split() {
        let v = vault(14, 1000, "1.5");
        let l = liquidate_vault(&v, &q("100"), &q("0.13")).unwrap();
        assert_eq!(l.debt_repaid, q("1000"));
        assert_eq!(l.penalty, q("130"));
        assert_eq!(l.returned_value, q("270"));
        assert_eq!(l.collateral_returned, Amount::from_decimal_str("2.7", 18).unwrap());
        assert_eq!(l.shortfall, q("0"));
        assert_eq!(l.events(&v, &q("100"), 1, 0)[0].quantity, Amount::from_decimal_str("11.3", 18).unwrap());
    }

    #[test]
    fn shortfall_and_healthy() {
        let v = vault(9, 1000, "1.5");
        let l = liquidate_vault(&v, &q("100"), &q("0.13")).unwrap();
        assert_eq!(l.debt_repaid, q("900"));
        assert_eq!(l.shortfall, q("100"));
        assert_eq!(l.penalty, q("0"));
        let healthy = vault(20, 1000, "1.5");
        assert!(matches!(liquidate_vault(&healthy, &q("100"), &q("0.13")), Err(VaultError::Healthy(_))));
    }
}
