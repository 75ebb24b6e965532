//! Constant-product pool replay.
//!
//! ```toml
//! asset_x = "RUBY"
//! asset_y = "EMERALD"
//! fee_rate = "0"
//!
//! [[ops]]
//! op = "acquire"
//! asset = "RUBY"
//! amount = "50"
//! price = "1"
//!
//! [[ops]]
//! op = "deposit"
//! x = "40"
//! y = "40"
//! price_x = "1"
//! price_y = "1"
//!
//! [[ops]]
//! op = "swap"
//! direction = "x_to_y"
//! amount_in = "10"
//! price_x = "1"
//! price_y = "1"
//! ```
//!
//! A single owner holds every LP unit and receives every swap output.

use serde::Deserialize;
use serde_json::json;

use super::{default_start, parse_toml, SimError, SimRun};
use crate::amount::Amount;
use crate::defi::{Direction, LiquidityPool};
use crate::scalar::{format_exact, serde_rational};
use crate::tax::{ChainEventRecord, EventFile, EventKind};
use crate::Rational;

fn eight() -> u8 {
    8
}

fn zero() -> Rational {
    Rational::from_integer(0.into())
}

fn whole() -> Rational {
    Rational::from_integer(1.into())
}

fn owner() -> String {
    "lp".into()
}

fn sixty() -> i64 {
    60
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum PoolOp {
    /// Buys `amount` of `asset` outside the pool, so later deposits and
    /// swaps have lots to draw on.
    Acquire {
        asset: String,
        amount: String,
        #[serde(with = "serde_rational")]
        price: Rational,
    },
    Deposit {
        x: String,
        y: String,
        #[serde(with = "serde_rational")]
        price_x: Rational,
        #[serde(with = "serde_rational")]
        price_y: Rational,
    },
    Swap {
        direction: Direction,
        amount_in: String,
        #[serde(with = "serde_rational")]
        price_x: Rational,
        #[serde(with = "serde_rational")]
        price_y: Rational,
    },
    /// Burns `fraction` of the owner's units.
    Withdraw {
        #[serde(default = "whole", with = "serde_rational")]
        fraction: Rational,
        #[serde(with = "serde_rational")]
        price_x: Rational,
        #[serde(with = "serde_rational")]
        price_y: Rational,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolScenario {
    pub asset_x: String,
    pub asset_y: String,
    #[serde(default = "eight")]
    pub decimals_x: u8,
    #[serde(default = "eight")]
    pub decimals_y: u8,
    #[serde(default = "zero", with = "serde_rational")]
    pub fee_rate: Rational,
    #[serde(default = "owner")]
    pub owner: String,
    #[serde(default = "default_start")]
    pub start_time: i64,
    /// Seconds between consecutive ops.
    #[serde(default = "sixty")]
    pub step_secs: i64,
    pub ops: Vec<PoolOp>,
}

impl PoolScenario {
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        parse_toml(text)
    }
}

pub fn run_pool_scenario(s: &PoolScenario) -> Result<SimRun, SimError> {
    if s.asset_x == s.asset_y {
        return Err(SimError::violation("asset_x and asset_y must differ"));
    }
    let mut pool = LiquidityPool::new(&s.asset_x, s.decimals_x, &s.asset_y, s.decimals_y, s.fee_rate.clone()).map_err(SimError::violation)?;
    let decimals = |asset: &str| {
        if asset == s.asset_x {
            Ok(s.decimals_x)
        } else if asset == s.asset_y {
            Ok(s.decimals_y)
        } else {
            Err(SimError::violation(format!("asset {asset} is not in the pool")))
        }
    };
    let mut events = EventFile::default();
    events.assets.insert(s.asset_x.clone(), s.decimals_x);
    events.assets.insert(s.asset_y.clone(), s.decimals_y);
    let mut seq = 1u64;
    let mut owner_units: u128 = 0;
    let mut swaps = Vec::new();

    for (i, op) in s.ops.iter().enumerate() {
        let ts = s.start_time + i as i64 * s.step_secs;
        match op {
            PoolOp::Acquire { asset, amount, price } => {
                let qty = Amount::from_decimal_str(amount, decimals(asset)?).map_err(SimError::violation)?;
                events.events.push(ChainEventRecord::new(seq, ts, EventKind::Purchase, asset, qty, price.clone()));
                seq += 1;
            }
            PoolOp::Deposit { x, y, price_x, price_y } => {
                let x = Amount::from_decimal_str(x, s.decimals_x).map_err(SimError::violation)?;
                let y = Amount::from_decimal_str(y, s.decimals_y).map_err(SimError::violation)?;
                let (position, next) = pool.add_liquidity(&s.owner, &x, &y, price_x, price_y, ts).map_err(SimError::violation)?;
                events.events.extend(next.deposit_events(&position, price_x, price_y, seq));
                seq += 2;
                owner_units += position.lp_units;
                pool = next;
            }
            PoolOp::Swap { direction, amount_in, price_x, price_y } => {
                let (asset_in, dec_in, p_in, asset_out, p_out) = match direction {
                    Direction::XToY => (&s.asset_x, s.decimals_x, price_x, &s.asset_y, price_y),
                    Direction::YToX => (&s.asset_y, s.decimals_y, price_y, &s.asset_x, price_x),
                };
                let amount_in = Amount::from_decimal_str(amount_in, dec_in).map_err(SimError::violation)?;
                let k_before = pool.k();
                let out = pool.swap_exact_in(&amount_in, *direction).map_err(SimError::violation)?;
                let pool_id = format!("{}/{}", s.asset_x, s.asset_y);
                events.events.push(
                    ChainEventRecord::new(seq, ts, EventKind::Swap, asset_in, amount_in, p_in.clone())
                        .with_meta("pool", pool_id.clone())
                        .with_meta("amount_out", out.amount_out.to_string()),
                );
                events.events.push(
                    ChainEventRecord::new(seq + 1, ts, EventKind::Purchase, asset_out, out.amount_out, p_out.clone())
                        .with_meta("pool", pool_id)
                        .with_meta("swap_seq", seq.to_string()),
                );
                swaps.push(json!({
                    "seq": seq,
                    "direction": direction,
                    "amount_in": amount_in.to_string(),
                    "amount_out": out.amount_out.to_string(),
                    "k_before": k_before.to_string(),
                    "k_after": out.pool.k().to_string(),
                }));
                seq += 2;
                pool = out.pool;
            }
            PoolOp::Withdraw { fraction, price_x, price_y } => {
                if *fraction <= zero() || *fraction > whole() {
                    return Err(SimError::violation(format!("withdraw fraction {} outside (0, 1]", format_exact(fraction))));
                }
                let units = Amount::new(owner_units, 0).mul_floor(fraction).map_err(SimError::violation)?.base_units();
                let w = pool.redeem_units(units).map_err(SimError::violation)?;
                let burned = Rational::new(units.into(), owner_units.into());
                events.events.extend(pool.withdrawal_events(&w, price_x, price_y, &burned, ts, seq));
                seq += 2;
                owner_units -= units;
                pool = w.pool;
            }
        }
    }

    let state = json!({
        "asset_x": pool.asset_x,
        "asset_y": pool.asset_y,
        "reserve_x": pool.reserve_x.to_string(),
        "reserve_y": pool.reserve_y.to_string(),
        "k_base_units": pool.k().to_string(),
        "fee_rate": format_exact(&pool.fee_rate),
        "total_lp_units": pool.total_lp_units.to_string(),
        "owner": s.owner,
        "owner_lp_units": owner_units.to_string(),
        "swaps": swaps,
    });
    Ok(SimRun { events, state })
}
