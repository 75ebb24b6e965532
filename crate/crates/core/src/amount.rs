//! Fixed-point asset amounts.

use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::scalar::{floor_to_u128, parse_rational, pow10};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AmountError {
    #[error("amount overflow")]
    Overflow,
    #[error("amount would become negative")]
    Underflow,
    #[error("decimals mismatch: {0} vs {1}")]
    DecimalsMismatch(u8, u8),
    #[error("cannot parse amount {0:?}")]
    Parse(String),
    #[error("amount {0:?} has more than {1} decimal places")]
    TooPrecise(String, u8),
}

/// Non-negative quantity in integer base units of an asset with `decimals`
/// fractional digits (8 for satoshi-denominated, 18 for wei-denominated).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Amount {
    base_units: u128,
    decimals: u8,
}

impl Amount {
    pub const BTC_DECIMALS: u8 = 8;
    pub const ETH_DECIMALS: u8 = 18;

    pub const fn new(base_units: u128, decimals: u8) -> Self {
        Amount { base_units, decimals }
    }

    pub const fn zero(decimals: u8) -> Self {
        Amount { base_units: 0, decimals }
    }

    pub const fn sats(base_units: u128) -> Self {
        Amount::new(base_units, Self::BTC_DECIMALS)
    }

    pub const fn wei(base_units: u128) -> Self {
        Amount::new(base_units, Self::ETH_DECIMALS)
    }

    /// Whole units, e.g. `Amount::whole(50, 8)` is 50 BTC.
    pub fn whole(units: u128, decimals: u8) -> Result<Self, AmountError> {
        let scale = 10u128.checked_pow(decimals as u32).ok_or(AmountError::Overflow)?;
        units
            .checked_mul(scale)
            .map(|b| Amount::new(b, decimals))
            .ok_or(AmountError::Overflow)
    }

    /// Parses a decimal string such as `"0.05"` into base units. Rejects
    /// values that need more precision than `decimals` provides.
    pub fn from_decimal_str(text: &str, decimals: u8) -> Result<Self, AmountError> {
        let r = parse_rational(text).map_err(|_| AmountError::Parse(text.to_string()))?;
        if r < Rational::from_integer(BigInt::from(0)) {
            return Err(AmountError::Underflow);
        }
        let scaled = r * Rational::from_integer(pow10(decimals as u32));
        if !scaled.is_integer() {
            return Err(AmountError::TooPrecise(text.to_string(), decimals));
        }
        floor_to_u128(&scaled)
            .map(|b| Amount::new(b, decimals))
            .ok_or(AmountError::Overflow)
    }

    pub const fn base_units(&self) -> u128 {
        self.base_units
    }

    pub const fn decimals(&self) -> u8 {
        self.decimals
    }

    pub const fn is_zero(&self) -> bool {
        self.base_units == 0
    }

    fn same_scale(&self, other: &Amount) -> Result<(), AmountError> {
        if self.decimals == other.decimals {
            Ok(())
        } else {
            Err(AmountError::DecimalsMismatch(self.decimals, other.decimals))
        }
    }

    pub fn checked_add(&self, other: &Amount) -> Result<Amount, AmountError> {
        self.same_scale(other)?;
        self.base_units
            .checked_add(other.base_units)
            .map(|b| Amount::new(b, self.decimals))
            .ok_or(AmountError::Overflow)
    }

    pub fn checked_sub(&self, other: &Amount) -> Result<Amount, AmountError> {
        self.same_scale(other)?;
        self.base_units
            .checked_sub(other.base_units)
            .map(|b| Amount::new(b, self.decimals))
            .ok_or(AmountError::Underflow)
    }

    /// Sums amounts that share `decimals`.
    pub fn checked_sum<'a, I>(items: I, decimals: u8) -> Result<Amount, AmountError>
    where
        I: IntoIterator<Item = &'a Amount>,
    {
        items
            .into_iter()
            .try_fold(Amount::zero(decimals), |acc, a| acc.checked_add(a))
    }

    /// `floor(self × factor)` in base units.
    pub fn mul_floor(&self, factor: &Rational) -> Result<Amount, AmountError> {
        let v = Rational::from_integer(BigInt::from(self.base_units)) * factor;
        if v < Rational::from_integer(BigInt::from(0)) {
            return Err(AmountError::Underflow);
        }
        floor_to_u128(&v)
            .map(|b| Amount::new(b, self.decimals))
            .ok_or(AmountError::Overflow)
    }

    /// Value in whole units as an exact rational.
    pub fn to_rational(&self) -> Rational {
        Rational::new(BigInt::from(self.base_units), pow10(self.decimals as u32))
    }

    /// Base units as an exact rational.
    pub fn base_rational(&self) -> Rational {
        Rational::from_integer(BigInt::from(self.base_units))
    }

    /// Converts a whole-unit rational back to base units, rounding down.
    pub fn from_rational_floor(value: &Rational, decimals: u8) -> Result<Amount, AmountError> {
        if *value < Rational::from_integer(BigInt::from(0)) {
            return Err(AmountError::Underflow);
        }
        floor_to_u128(&(value * Rational::from_integer(pow10(decimals as u32))))
            .map(|b| Amount::new(b, decimals))
            .ok_or(AmountError::Overflow)
    }

    pub fn to_signed(&self) -> Result<SignedAmount, AmountError> {
        i128::try_from(self.base_units)
            .map(|b| SignedAmount::new(b, self.decimals))
            .map_err(|_| AmountError::Overflow)
    }
}

impl PartialOrd for Amount {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        (self.decimals == other.decimals).then(|| self.base_units.cmp(&other.base_units))
    }
}

fn write_fixed(f: &mut fmt::Formatter<'_>, neg: bool, abs: u128, decimals: u8) -> fmt::Result {
    let sign = if neg { "-" } else { "" };
    if decimals == 0 {
        return write!(f, "{sign}{abs}");
    }
    let scale = 10u128.pow(decimals as u32);
    let frac = format!("{:0>width$}", abs % scale, width = decimals as usize);
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        write!(f, "{sign}{}", abs / scale)
    } else {
        write!(f, "{sign}{}.{frac}", abs / scale)
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_fixed(f, false, self.base_units, self.decimals)
    }
}

/// Signed counterpart of [`Amount`], used where a result may legitimately be
/// negative (net builder fee, gains).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignedAmount {
    base_units: i128,
    decimals: u8,
}

impl SignedAmount {
    pub const fn new(base_units: i128, decimals: u8) -> Self {
        SignedAmount { base_units, decimals }
    }

    pub const fn base_units(&self) -> i128 {
        self.base_units
    }

    pub const fn decimals(&self) -> u8 {
        self.decimals
    }

    pub fn checked_add(&self, other: &SignedAmount) -> Result<SignedAmount, AmountError> {
        if self.decimals != other.decimals {
            return Err(AmountError::DecimalsMismatch(self.decimals, other.decimals));
        }
        self.base_units
            .checked_add(other.base_units)
            .map(|b| SignedAmount::new(b, self.decimals))
            .ok_or(AmountError::Overflow)
    }

    pub fn checked_sub(&self, other: &SignedAmount) -> Result<SignedAmount, AmountError> {
        if self.decimals != other.decimals {
            return Err(AmountError::DecimalsMismatch(self.decimals, other.decimals));
        }
        self.base_units
            .checked_sub(other.base_units)
            .map(|b| SignedAmount::new(b, self.decimals))
            .ok_or(AmountError::Overflow)
    }

    pub fn to_rational(&self) -> Rational {
        Rational::new(BigInt::from(self.base_units), pow10(self.decimals as u32))
    }
}

impl fmt::Display for SignedAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_fixed(f, self.base_units < 0, self.base_units.unsigned_abs(), self.decimals)
    }
}
