//! Constant-product liquidity pool with full-range LP units.

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::amount::{Amount, AmountError};
use crate::scalar::{floor_to_u128, Scalar};
use crate::tax::{ChainEventRecord, EventKind};
use crate::Rational;

/// 0.05%, 0.3% and 1%.
pub fn fee_tiers() -> [Rational; 3] {
    [
        Rational::new(BigInt::from(5), BigInt::from(10_000)),
        Rational::new(BigInt::from(3), BigInt::from(1_000)),
        Rational::new(BigInt::from(1), BigInt::from(100)),
    ]
}

/// Relative tolerance on the equal-value deposit rule.
pub const DEFAULT_DEPOSIT_TOLERANCE: (i64, i64) = (1, 1000);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PoolError {
    #[error("input amount is zero")]
    ZeroInput,
    #[error("output rounds to zero")]
    DustOutput,
    #[error("pool has no liquidity")]
    NotLive,
    #[error("fee rate must lie in [0, 1)")]
    BadFee,
    #[error("deposit values differ by more than the tolerance ({x_value} vs {y_value})")]
    UnequalValue { x_value: String, y_value: String },
    #[error("prices must be positive")]
    BadPrice,
    #[error("redeeming {requested} units but only {available} exist")]
    OverRedemption { requested: u128, available: u128 },
    #[error("deposit mints zero LP units")]
    ZeroMint,
    #[error("asset decimals do not match the pool")]
    DecimalsMismatch,
    #[error(transparent)]
    Amount(#[from] AmountError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    XToY,
    YToX,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiquidityPool {
    pub asset_x: String,
    pub asset_y: String,
    pub reserve_x: Amount,
    pub reserve_y: Amount,
    #[serde(with = "crate::scalar::serde_rational")]
    pub fee_rate: Rational,
    pub total_lp_units: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepositRecord {
    pub x_in: Amount,
    pub y_in: Amount,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpPosition {
    pub owner: String,
    pub lp_units: u128,
    pub deposit_record: DepositRecord,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapOutcome {
    pub amount_out: Amount,
    pub pool: LiquidityPool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Withdrawal {
    pub x_out: Amount,
    pub y_out: Amount,
    pub pool: LiquidityPool,
}

fn exact_out(reserve_in: &Amount, reserve_out: &Amount, amount_in: &Amount, fee: &Rational) -> Rational {
    let eff = amount_in.base_rational() * (Rational::from_integer(1.into()) - fee);
    reserve_out.base_rational() * &eff / (reserve_in.base_rational() + eff)
}

impl LiquidityPool {
    /// An empty pool; liquidity arrives through [`LiquidityPool::add_liquidity`].
    pub fn new(asset_x: &str, x_decimals: u8, asset_y: &str, y_decimals: u8, fee_rate: Rational) -> Result<Self, PoolError> {
        if fee_rate.is_negative() || fee_rate >= Rational::from_integer(1.into()) {
            return Err(PoolError::BadFee);
        }
        Ok(LiquidityPool {
            asset_x: asset_x.into(),
            asset_y: asset_y.into(),
            reserve_x: Amount::zero(x_decimals),
            reserve_y: Amount::zero(y_decimals),
            fee_rate,
            total_lp_units: 0,
        })
    }

    pub fn is_live(&self) -> bool {
        self.reserve_x.base_units() > 0 && self.reserve_y.base_units() > 0
    }

    /// `reserve_x × reserve_y` in base units.
    pub fn k(&self) -> BigUint {
        BigUint::from(self.reserve_x.base_units()) * BigUint::from(self.reserve_y.base_units())
    }

    fn sides(&self, dir: Direction) -> (&Amount, &Amount) {
        match dir {
            Direction::XToY => (&self.reserve_x, &self.reserve_y),
            Direction::YToX => (&self.reserve_y, &self.reserve_x),
        }
    }

    /// Sells `amount_in` into the pool. The output is rounded down; the
    /// reserves take the full input, fee included.
    pub fn swap_exact_in(&self, amount_in: &Amount, dir: Direction) -> Result<SwapOutcome, PoolError> {
        if amount_in.base_units() == 0 {
            return Err(PoolError::ZeroInput);
        }
        if !self.is_live() {
            return Err(PoolError::NotLive);
        }
        let (r_in, r_out) = self.sides(dir);
        if amount_in.decimals() != r_in.decimals() {
            return Err(PoolError::DecimalsMismatch);
        }
        let out = floor_to_u128(&exact_out(r_in, r_out, amount_in, &self.fee_rate)).ok_or(AmountError::Overflow)?;
        if out == 0 {
            return Err(PoolError::DustOutput);
        }
        let amount_out = Amount::new(out, r_out.decimals());
        let new_in = r_in.checked_add(amount_in)?;
        let new_out = r_out.checked_sub(&amount_out)?;
        let mut pool = self.clone();
        match dir {
            Direction::XToY => {
                pool.reserve_x = new_in;
                pool.reserve_y = new_out;
            }
            Direction::YToX => {
                pool.reserve_y = new_in;
                pool.reserve_x = new_out;
            }
        }
        Ok(SwapOutcome { amount_out, pool })
    }

    /// Deposit at the given whole-unit prices with the default 0.1% tolerance.
    pub fn add_liquidity(
        &self,
        owner: &str,
        x_in: &Amount,
        y_in: &Amount,
        price_x: &Rational,
        price_y: &Rational,
        timestamp: i64,
    ) -> Result<(LpPosition, LiquidityPool), PoolError> {
        let (n, d) = DEFAULT_DEPOSIT_TOLERANCE;
        let tol = Rational::new(BigInt::from(n), BigInt::from(d));
        self.add_liquidity_with_tolerance(owner, x_in, y_in, price_x, price_y, timestamp, &tol)
    }

    /// Both legs must carry equal value within `tolerance` (relative to the
    /// larger leg). The first deposit mints `isqrt(x × y)` units; later ones
    /// mint in proportion to the smaller of the two reserve shares.
    #[allow(clippy::too_many_arguments)]
    pub fn add_liquidity_with_tolerance(
        &self,
        owner: &str,
        x_in: &Amount,
        y_in: &Amount,
        price_x: &Rational,
        price_y: &Rational,
        timestamp: i64,
        tolerance: &Rational,
    ) -> Result<(LpPosition, LiquidityPool), PoolError> {
        if !price_x.is_positive() || !price_y.is_positive() {
            return Err(PoolError::BadPrice);
        }
        if x_in.decimals() != self.reserve_x.decimals() || y_in.decimals() != self.reserve_y.decimals() {
            return Err(PoolError::DecimalsMismatch);
        }
        if x_in.base_units() == 0 || y_in.base_units() == 0 {
            return Err(PoolError::ZeroInput);
        }
        let vx = x_in.to_rational() * price_x;
        let vy = y_in.to_rational() * price_y;
        let larger = if vx > vy { vx.clone() } else { vy.clone() };
        if (&vx - &vy).abs() > tolerance * &larger {
            return Err(PoolError::UnequalValue {
                x_value: crate::scalar::format_decimal(&vx, 8),
                y_value: crate::scalar::format_decimal(&vy, 8),
            });
        }
        let minted = if self.total_lp_units == 0 || !self.is_live() {
            let product = BigUint::from(x_in.base_units()) * BigUint::from(y_in.base_units());
            product.sqrt().to_u128().ok_or(AmountError::Overflow)?
        } else {
            let t = BigUint::from(self.total_lp_units);
            let by_x = &t * x_in.base_units() / self.reserve_x.base_units();
            let by_y = &t * y_in.base_units() / self.reserve_y.base_units();
            by_x.min(by_y).to_u128().ok_or(AmountError::Overflow)?
        };
        if minted == 0 {
            return Err(PoolError::ZeroMint);
        }
        let mut pool = self.clone();
        pool.reserve_x = pool.reserve_x.checked_add(x_in)?;
        pool.reserve_y = pool.reserve_y.checked_add(y_in)?;
        pool.total_lp_units = pool.total_lp_units.checked_add(minted).ok_or(AmountError::Overflow)?;
        let position = LpPosition {
            owner: owner.into(),
            lp_units: minted,
            deposit_record: DepositRecord { x_in: *x_in, y_in: *y_in, timestamp },
        };
        Ok((position, pool))
    }

    /// Burns `units` for a pro-rata share of the reserves, rounded down.
    /// Burning the last units drains the pool exactly.
    pub fn redeem_units(&self, units: u128) -> Result<Withdrawal, PoolError> {
        if units > self.total_lp_units {
            return Err(PoolError::OverRedemption { requested: units, available: self.total_lp_units });
        }
        if units == 0 {
            return Err(PoolError::ZeroInput);
        }
        let (x_out, y_out) = if units == self.total_lp_units {
            (self.reserve_x, self.reserve_y)
        } else {
            let share = |r: &Amount| {
                let v = BigUint::from(r.base_units()) * units / self.total_lp_units;
                Amount::new(v.to_u128().expect("share of a u128 reserve fits"), r.decimals())
            };
            (share(&self.reserve_x), share(&self.reserve_y))
        };
        let mut pool = self.clone();
        pool.reserve_x = pool.reserve_x.checked_sub(&x_out)?;
        pool.reserve_y = pool.reserve_y.checked_sub(&y_out)?;
        pool.total_lp_units -= units;
        Ok(Withdrawal { x_out, y_out, pool })
    }

    /// Burns the whole position.
    pub fn remove_liquidity(&self, position: &LpPosition) -> Result<Withdrawal, PoolError> {
        self.redeem_units(position.lp_units)
    }

    /// Share of the pool a position represents.
    pub fn pool_share(&self, position: &LpPosition) -> Rational {
        if self.total_lp_units == 0 {
            return Rational::zero();
        }
        Rational::new(BigInt::from(position.lp_units), BigInt::from(self.total_lp_units))
    }

    /// Tax records for a deposit: one `lp_deposit` per leg.
    pub fn deposit_events(
        &self,
        position: &LpPosition,
        price_x: &Rational,
        price_y: &Rational,
        first_seq: u64,
    ) -> Vec<ChainEventRecord> {
        let d = &position.deposit_record;
        let pool_id = format!("{}/{}", self.asset_x, self.asset_y);
        vec![
            ChainEventRecord::new(first_seq, d.timestamp, EventKind::LpDeposit, &self.asset_x, d.x_in, price_x.clone())
                .with_meta("pool", pool_id.clone()),
            ChainEventRecord::new(first_seq + 1, d.timestamp, EventKind::LpDeposit, &self.asset_y, d.y_in, price_y.clone())
                .with_meta("pool", pool_id),
        ]
    }

    /// Tax records for a withdrawal; `fraction` is the share of the owner's
    /// position that was burned.
    #[allow(clippy::too_many_arguments)]
    pub fn withdrawal_events(
        &self,
        w: &Withdrawal,
        price_x: &Rational,
        price_y: &Rational,
        fraction: &Rational,
        timestamp: i64,
        first_seq: u64,
    ) -> Vec<ChainEventRecord> {
        let pool_id = format!("{}/{}", self.asset_x, self.asset_y);
        let frac = crate::scalar::format_exact(fraction);
        vec![
            ChainEventRecord::new(first_seq, timestamp, EventKind::LpWithdrawal, &self.asset_x, w.x_out, price_x.clone())
                .with_meta("pool", pool_id.clone())
                .with_meta("lp_fraction", frac.clone()),
            ChainEventRecord::new(first_seq + 1, timestamp, EventKind::LpWithdrawal, &self.asset_y, w.y_out, price_y.clone())
                .with_meta("pool", pool_id)
                .with_meta("lp_fraction", frac),
        ]
    }
}

/// `(out / amount_in) / (reserve_out / reserve_in) − 1` on the exact,
/// unrounded output. Never positive.
pub fn quote_slippage<T: Scalar>(pool: &LiquidityPool, amount_in: &Amount, dir: Direction) -> Result<T, PoolError> {
    if amount_in.base_units() == 0 {
        return Err(PoolError::ZeroInput);
    }
    if !pool.is_live() {
        return Err(PoolError::NotLive);
    }
    let (r_in, r_out) = pool.sides(dir);
    let out = exact_out(r_in, r_out, amount_in, &pool.fee_rate);
    let effective = out / amount_in.base_rational();
    let marginal = r_out.base_rational() / r_in.base_rational();
    Ok(T::from_rational(&(effective / marginal - Rational::from_integer(1.into()))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::parse_rational;

    fn whole(n: u128) -> Amount {
        Amount::whole(n, 18).unwrap()
    }

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn pool_40_40(fee: &str) -> LiquidityPool {
        let p = LiquidityPool::new("RUBY", 18, "EMERALD", 18, q(fee)).unwrap();
        p.add_liquidity("lp", &whole(40), &whole(40), &q("1"), &q("1"), 0).unwrap().1
    }

    #[test]
    fn fee_free_swap_matches_constant_product() {
        let p = pool_40_40("0");
        assert_eq!(p.k(), BigUint::from(1600u32) * BigUint::from(10u32).pow(36));
        let s = p.swap_exact_in(&whole(10), Direction::XToY).unwrap();
        assert_eq!(s.amount_out, whole(8));
        assert_eq!(s.pool.k(), p.k());
    }

    #[test]
    fn fee_swap_frozen_value() {
        // floor(40e18 × 9.97e18 / 49.97e18), from a Python Fraction oracle.
        let p = pool_40_40("0.003");
        let s = p.swap_exact_in(&whole(10), Direction::XToY).unwrap();
        assert_eq!(s.amount_out.base_units(), 7_980_788_473_083_850_310);
        assert!(s.pool.k() > p.k());
    }

    #[test]
    fn swap_errors() {
        let p = pool_40_40("0.003");
        assert_eq!(p.swap_exact_in(&Amount::wei(0), Direction::XToY), Err(PoolError::ZeroInput));
        assert_eq!(p.swap_exact_in(&Amount::wei(1), Direction::XToY), Err(PoolError::DustOutput));
        let empty = LiquidityPool::new("A", 18, "B", 18, q("0")).unwrap();
        assert_eq!(empty.swap_exact_in(&whole(1), Direction::XToY), Err(PoolError::NotLive));
    }

    #[test]
    fn slippage_values() {
        let p = pool_40_40("0");
        let s: Rational = quote_slippage(&p, &whole(10), Direction::XToY).unwrap();
        assert_eq!(s, q("-0.2"));
        let tiny: f64 = quote_slippage(&p, &Amount::wei(1), Direction::XToY).unwrap();
        assert!(tiny <= 0.0 && tiny > -1e-15);
    }

    #[test]
    fn deposits_and_shares() {
        let p = LiquidityPool::new("BAT", 18, "DAI", 18, q("0.003")).unwrap();
        let (pos, p) = p.add_liquidity("a", &whole(300), &whole(100), &q("1/3"), &q("1"), 0).unwrap();
        assert_eq!(pos.lp_units, p.total_lp_units);
        assert_eq!(p.pool_share(&pos), q("1"));
        let (pos2, p2) = p.add_liquidity("b", &whole(300), &whole(100), &q("1/3"), &q("1"), 1).unwrap();
        assert_eq!(p2.pool_share(&pos2), q("1/2"));
        assert!(matches!(
            p.add_liquidity("c", &whole(100), &whole(100), &q("1/3"), &q("1"), 2),
            Err(PoolError::UnequalValue { .. })
        ));
    }

    #[test]
    fn withdrawals() {
        let p = LiquidityPool::new("A", 18, "B", 8, q("0")).unwrap();
        let x = whole(5);
        let y = Amount::new(7_0000_0000, 8);
        let (pos, p) = p.add_liquidity("a", &x, &y, &q("7/5"), &q("1"), 0).unwrap();
        let w = p.remove_liquidity(&pos).unwrap();
        assert_eq!((w.x_out, w.y_out), (x, y));
        assert_eq!(w.pool.total_lp_units, 0);
        let mut greedy = pos.clone();
        greedy.lp_units += 1;
        assert!(matches!(p.remove_liquidity(&greedy), Err(PoolError::OverRedemption { .. })));
    }
}
