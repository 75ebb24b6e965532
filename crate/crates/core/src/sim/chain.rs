//! Block-by-block replay of the subsidy schedule and difficulty retargets,
//! emitting one miner's income.
//!
//! ```toml
//! start_height = 209995
//! blocks = 10
//! payout = "pool_per_share"   # solo | pool_per_share | pool_per_block
//! miner_hash_share = "0.01"
//! pool_hash_share = "0.2"     # pool_per_block only
//! pool_fee = "0.02"
//! btc_price = "30000"
//! ```
//!
//! Solo miners win a block with probability equal to their hash share;
//! pay-per-share pays the expected share of every block; pay-per-block pays
//! a proportional cut only of blocks the pool wins. Wins are drawn from a
//! seeded generator.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{default_start, parse_toml, SimError, SimRun};
use crate::amount::Amount;
use crate::consensus::{block_subsidy, retarget_difficulty, EconConfig};
use crate::ledger::block::{compact_to_target, hex_biguint};
use crate::scalar::{format_exact, rational_to_f64, serde_rational};
use crate::tax::{ChainEventRecord, EventFile, EventKind};
use crate::Rational;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payout {
    #[default]
    Solo,
    PoolPerShare,
    PoolPerBlock,
}

fn zero() -> Rational {
    Rational::zero()
}

fn zero_text() -> String {
    "0".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainScenario {
    #[serde(default)]
    pub start_height: u64,
    pub blocks: u64,
    #[serde(default = "default_start")]
    pub start_time: i64,
    /// Observed spacing; defaults to the retarget rule's target interval.
    #[serde(default)]
    pub block_interval_secs: Option<u64>,
    /// Starting target as hex; defaults to the compact value `0x1d00ffff`.
    #[serde(default)]
    pub initial_target: Option<String>,
    #[serde(default)]
    pub payout: Payout,
    #[serde(with = "serde_rational")]
    pub miner_hash_share: Rational,
    #[serde(default, with = "serde_rational::option")]
    pub pool_hash_share: Option<Rational>,
    #[serde(default = "zero", with = "serde_rational")]
    pub pool_fee: Rational,
    /// Transaction fees per block in BTC.
    #[serde(default = "zero_text")]
    pub fees_per_block: String,
    #[serde(with = "serde_rational")]
    pub btc_price: Rational,
    #[serde(default)]
    pub seed: u64,
}

impl ChainScenario {
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        parse_toml(text)
    }
}

fn check_share(name: &str, r: &Rational) -> Result<(), SimError> {
    if *r < Rational::zero() || *r > Rational::one() {
        return Err(SimError::violation(format!("{name} must lie in [0, 1]")));
    }
    Ok(())
}

pub fn run_chain_scenario(s: &ChainScenario, cfg: &EconConfig, seed: Option<u64>) -> Result<SimRun, SimError> {
    check_share("miner_hash_share", &s.miner_hash_share)?;
    check_share("pool_fee", &s.pool_fee)?;
    let pool_share = match (s.payout, &s.pool_hash_share) {
        (Payout::PoolPerBlock, None) => return Err(SimError::violation("pool_per_block needs pool_hash_share")),
        (Payout::PoolPerBlock, Some(p)) => {
            check_share("pool_hash_share", p)?;
            if p.is_zero() || *p < s.miner_hash_share {
                return Err(SimError::violation("pool_hash_share must be positive and at least miner_hash_share"));
            }
            p.clone()
        }
        _ => Rational::zero(),
    };
    let interval = s.block_interval_secs.unwrap_or(cfg.retarget.target_block_interval_secs);
    let mut target: BigUint = match &s.initial_target {
        Some(hex) => hex_biguint::parse(hex).ok_or_else(|| SimError::violation(format!("bad initial_target {hex:?}")))?,
        None => compact_to_target(0x1d00_ffff),
    };
    let fees = Amount::from_decimal_str(&s.fees_per_block, Amount::BTC_DECIMALS).map_err(SimError::violation)?;
    let keep = Rational::one() - &s.pool_fee;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(s.seed));

    let mut events = EventFile::default();
    events.assets.insert("BTC".into(), Amount::BTC_DECIMALS);
    let mut retargets = Vec::new();
    let mut halvings = Vec::new();
    let mut issued = Amount::zero(Amount::BTC_DECIMALS);
    let mut earned = Amount::zero(Amount::BTC_DECIMALS);
    let mut won = 0u64;
    let mut seq = 1u64;
    let mut prev_subsidy: Option<Amount> = None;
    let window = cfg.retarget.window_blocks;

    for i in 0..s.blocks {
        let height = s.start_height + i;
        let time = s.start_time + (i * interval) as i64;
        if height > 0 && height.is_multiple_of(window) && i > 0 {
            let timespan = (interval * window) as i64;
            let next = retarget_difficulty(&target, timespan, &cfg.retarget).map_err(SimError::violation)?;
            retargets.push(json!({
                "height": height,
                "old_target": format!("0x{}", target.to_str_radix(16)),
                "new_target": format!("0x{}", next.to_str_radix(16)),
            }));
            target = next;
        }
        let subsidy = block_subsidy(height, &cfg.schedule);
        if let Some(prev) = prev_subsidy.filter(|p| *p != subsidy) {
            halvings.push(json!({ "height": height, "before": prev.to_string(), "after": subsidy.to_string() }));
        }
        prev_subsidy = Some(subsidy);
        let reward = subsidy.checked_add(&fees).map_err(SimError::violation)?;
        issued = issued.checked_add(&subsidy).map_err(SimError::violation)?;

        let (kind, paid) = match s.payout {
            Payout::Solo => {
                let hit = rng.gen::<f64>() < rational_to_f64(&s.miner_hash_share);
                (EventKind::MiningReward, if hit { reward } else { Amount::zero(reward.decimals()) })
            }
            Payout::PoolPerShare => (EventKind::PoolPayout, reward.mul_floor(&(&s.miner_hash_share * &keep)).map_err(SimError::violation)?),
            Payout::PoolPerBlock => {
                let hit = rng.gen::<f64>() < rational_to_f64(&pool_share);
                let cut = &s.miner_hash_share / &pool_share * &keep;
                let paid = if hit { reward.mul_floor(&cut).map_err(SimError::violation)? } else { Amount::zero(reward.decimals()) };
                (EventKind::PoolPayout, paid)
            }
        };
        if paid.base_units() > 0 {
            won += 1;
            earned = earned.checked_add(&paid).map_err(SimError::violation)?;
            events.events.push(
                ChainEventRecord::new(seq, time, kind, "BTC", paid, s.btc_price.clone())
                    .with_meta("height", height.to_string())
                    .with_meta("subsidy", subsidy.to_string()),
            );
            seq += 1;
        }
    }

    let state = json!({
        "start_height": s.start_height,
        "blocks": s.blocks,
        "tip_height": s.start_height + s.blocks.saturating_sub(1),
        "tip_target": format!("0x{}", target.to_str_radix(16)),
        "payout": s.payout,
        "miner_hash_share": format_exact(&s.miner_hash_share),
        "paid_blocks": won,
        "miner_earned": earned.to_string(),
        "subsidy_issued": issued.to_string(),
        "halvings": halvings,
        "retargets": retargets,
    });
    Ok(SimRun { events, state })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(payout: &str) -> ChainScenario {
        ChainScenario::from_toml_str(&format!(
            r#"
start_height = 209998
blocks = 4
payout = "{payout}"
miner_hash_share = "0.5"
pool_hash_share = "1"
btc_price = "30000"
"#
        ))
        .unwrap()
    }

    #[test]
    fn halving_shows_in_pay_per_share_events() {
        let run = run_chain_scenario(&scenario("pool_per_share"), &EconConfig::default(), None).unwrap();
        let qty: Vec<String> = run.events.events.iter().map(|e| e.quantity.to_string()).collect();
        assert_eq!(qty, ["25", "25", "12.5", "12.5"]);
        assert_eq!(run.state["halvings"][0]["height"], 210_000);
        assert_eq!(run.state["subsidy_issued"], "150");
    }

    #[test]
    fn solo_and_pool_per_block_are_seeded() {
        let cfg = EconConfig::default();
        for p in ["solo", "pool_per_block"] {
            let a = run_chain_scenario(&scenario(p), &cfg, Some(3)).unwrap();
            let b = run_chain_scenario(&scenario(p), &cfg, Some(3)).unwrap();
            assert_eq!(a.events, b.events);
        }
    }

    #[test]
    fn retarget_fires_at_window_boundary() {
        let mut s = scenario("pool_per_share");
        s.start_height = 2015;
        s.block_interval_secs = Some(300);
        let run = run_chain_scenario(&s, &EconConfig::default(), None).unwrap();
        let r = &run.state["retargets"][0];
        assert_eq!(r["height"], 2016);
        // Blocks twice as fast halve the target.
        let old = hex_biguint::parse(r["old_target"].as_str().unwrap()).unwrap();
        let new = hex_biguint::parse(r["new_target"].as_str().unwrap()).unwrap();
        assert_eq!(new * 2u32, old);
    }

    #[test]
    fn invalid_shares() {
        let mut s = scenario("pool_per_block");
        s.pool_hash_share = None;
        assert!(run_chain_scenario(&s, &EconConfig::default(), None).is_err());
        let mut s = scenario("solo");
        s.miner_hash_share = Rational::from_integer(2.into());
        assert!(run_chain_scenario(&s, &EconConfig::default(), None).is_err());
    }
}
