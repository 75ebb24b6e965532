//! Scalar abstractions and exact-rational helpers.

use std::fmt::Debug;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{Float, Num, One, Signed, ToPrimitive, Zero};

use crate::Rational;

/// A number the closed-form formulas can be evaluated in.
///
/// Implemented for `f32`, `f64` and [`Rational`]; the rational instance gives
/// exact answers wherever the formula is rational.
pub trait Scalar: Num + Clone + PartialOrd + Debug {
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;

    fn from_u64(v: u64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(v)))
    }
}

impl Scalar for f64 {
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r) as f32
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
}

/// Scalars with square roots; formulas involving `sqrt` need this.
pub trait RealScalar: Scalar + Float {}

impl<T: Scalar + Float> RealScalar for T {}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid number {0:?}")]
pub struct ParseRationalError(pub String);

/// Parses `"12"`, `"-0.05"`, `"1e-5"`, `"2.5E3"` or `"3/7"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = s[i + 1..].parse().map_err(|_| err())?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(all.parse::<BigInt>().map_err(|_| err())?);
    let scale = exp - frac_part.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if neg { -value } else { value })
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    // Scale so both parts fit an f64 mantissa comfortably before dividing.
    let n = r.numer();
    let d = r.denom();
    match (n.to_f64(), d.to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
        _ => {
            let shift = n.bits().max(d.bits()).saturating_sub(1000);
            let a = (n >> shift).to_f64().unwrap_or(f64::NAN);
            let b = (d >> shift).to_f64().unwrap_or(f64::NAN);
            a / b
        }
    }
}

pub fn rational_from_u128(v: u128) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn rational_from_i64(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn pow10(decimals: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), decimals as usize)
}

/// Largest integer ≤ `r`, or `None` when negative or wider than `u128`.
pub fn floor_to_u128(r: &Rational) -> Option<u128> {
    r.floor().to_integer().to_u128()
}

/// Smallest integer ≥ `r`, or `None` when negative or wider than `u128`.
pub fn ceil_to_u128(r: &Rational) -> Option<u128> {
    r.ceil().to_integer().to_u128()
}

/// Renders `r` as a decimal rounded half away from zero to `scale` places.
pub fn format_decimal(r: &Rational, scale: u32) -> String {
    let factor = pow10(scale);
    let scaled = (r * Rational::from_integer(factor.clone())).round().to_integer();
    let neg = scaled.is_negative();
    let abs = scaled.abs();
    let (int_part, frac_part) = abs.div_rem(&factor);
    let sign = if neg { "-" } else { "" };
    if scale == 0 {
        return format!("{sign}{int_part}");
    }
    format!("{sign}{int_part}.{:0>width$}", frac_part.to_string(), width = scale as usize)
}

/// Renders `r` exactly: a terminating decimal when possible, `n/d` otherwise.
pub fn format_exact(r: &Rational) -> String {
    let mut d = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut places = 0u32;
    let mut twos = 0u32;
    let mut fives = 0u32;
    while d.is_even() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if d.is_one() {
        places = places.max(twos).max(fives);
        let s = format_decimal(r, places);
        if places > 0 {
            return s.trim_end_matches('0').trim_end_matches('.').to_string();
        }
        return s;
    }
    format!("{}/{}", r.numer(), r.denom())
}

/// `e^x` as an exact rational, accurate to roughly `10^-digits` relative.
///
/// The argument is halved until below 1/2, the Taylor series is summed, and
/// the result squared back up; every intermediate is rounded to a fixed
/// denominator so the computation stays bounded and deterministic.
pub fn exp_rational(x: &Rational, digits: u32) -> Rational {
    if x.is_zero() {
        return Rational::one();
    }
    if x.is_negative() {
        return exp_rational(&-x, digits).recip();
    }
    let guard = digits + 10;
    let unit = Rational::from_integer(pow10(guard));
    let round = |v: Rational| (v * &unit).round() / &unit;
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let mut reduced = x.clone();
    let mut squarings = 0u32;
    while reduced > half {
        reduced /= BigInt::from(2);
        squarings += 1;
    }
    let eps = Rational::new(BigInt::one(), pow10(guard));
    let mut sum = Rational::one();
    let mut term = Rational::one();
    let mut k = 1u64;
    loop {
        term = round(term * &reduced / BigInt::from(k));
        if term.abs() < eps {
            break;
        }
        sum += &term;
        k += 1;
    }
    for _ in 0..squarings {
        sum = round(&sum * &sum);
    }
    sum
}

/// Integer square root (floor).
pub fn isqrt(v: &BigUint) -> BigUint {
    v.sqrt()
}

/// Serde adapter storing a [`Rational`] as an exact string.
pub mod serde_rational {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{format_exact, parse_rational};
    use crate::Rational;

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_exact(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = RawNumber::deserialize(d)?;
        raw.into_rational().map_err(serde::de::Error::custom)
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(crate) enum RawNumber {
        Text(String),
        Int(i64),
        Float(f64),
    }

    impl RawNumber {
        pub(crate) fn into_rational(self) -> Result<Rational, super::ParseRationalError> {
            match self {
                RawNumber::Text(s) => parse_rational(&s),
                RawNumber::Int(i) => Ok(super::rational_from_i64(i)),
                // Floats go through their shortest decimal rendering.
                RawNumber::Float(f) => parse_rational(&format!("{f}")),
            }
        }
    }

    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        use super::RawNumber;
        use crate::Rational;

        pub fn serialize<S: Serializer>(value: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
            match value {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
            Option::<RawNumber>::deserialize(d)?
                .map(|r| r.into_rational().map_err(serde::de::Error::custom))
                .transpose()
        }
    }
}
