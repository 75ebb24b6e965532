//! Replays validator duties, rewards and penalties epoch by epoch.
//!
//! ```toml
//! eth_price = "2000"
//!
//! [[validators]]
//! id = "v1"
//! stake = "32"
//!
//! [[duties]]
//! epoch = 0
//! kind = "attest"
//! validator = "v1"
//! source = true
//! target = true
//! head = true
//! delay = 1
//!
//! [[duties]]
//! epoch = 1
//! kind = "double_vote"
//! validator = "v1"
//! ```
//!
//! Other kinds: `missed_source`, `missed_target`, `missed_head`,
//! `missed_sync` (with `forgone`), `double_proposal` and `distribute`
//! (with `amount`, split pro rata over active stake). Duties run in epoch
//! order, file order within an epoch.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::json;

use super::{default_start, parse_toml, SimError, SimRun};
use crate::amount::Amount;
use crate::consensus::{AttestationVotes, DutyEvent, EconConfig, Validator, ValidatorSet};
use crate::scalar::serde_rational;
use crate::tax::{ChainEventRecord, EventFile, EventKind};
use crate::Rational;

fn yes() -> bool {
    true
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidatorSpec {
    pub id: String,
    pub stake: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DutySpec {
    Attest {
        epoch: u64,
        validator: String,
        #[serde(default = "yes")]
        source: bool,
        #[serde(default = "yes")]
        target: bool,
        #[serde(default = "yes")]
        head: bool,
        #[serde(default = "one")]
        delay: u32,
    },
    MissedSource { epoch: u64, validator: String },
    MissedTarget { epoch: u64, validator: String },
    MissedHead { epoch: u64, validator: String },
    MissedSync { epoch: u64, validator: String, forgone: String },
    DoubleProposal { epoch: u64, validator: String },
    DoubleVote { epoch: u64, validator: String },
    Distribute { epoch: u64, amount: String },
}

impl DutySpec {
    pub fn epoch(&self) -> u64 {
        match self {
            DutySpec::Attest { epoch, .. }
            | DutySpec::MissedSource { epoch, .. }
            | DutySpec::MissedTarget { epoch, .. }
            | DutySpec::MissedHead { epoch, .. }
            | DutySpec::MissedSync { epoch, .. }
            | DutySpec::DoubleProposal { epoch, .. }
            | DutySpec::DoubleVote { epoch, .. }
            | DutySpec::Distribute { epoch, .. } => *epoch,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidatorScenario {
    #[serde(default = "default_start")]
    pub start_time: i64,
    #[serde(with = "serde_rational")]
    pub eth_price: Rational,
    /// Emit a purchase for each initial stake so later penalties have lots.
    #[serde(default = "yes")]
    pub record_deposits: bool,
    pub validators: Vec<ValidatorSpec>,
    #[serde(default)]
    pub duties: Vec<DutySpec>,
}

impl ValidatorScenario {
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        parse_toml(text)
    }
}

pub fn run_validator_scenario(s: &ValidatorScenario, cfg: &EconConfig) -> Result<SimRun, SimError> {
    let params = &cfg.pos;
    let eth = |text: &str| Amount::from_decimal_str(text, Amount::ETH_DECIMALS).map_err(SimError::violation);
    let mut set = ValidatorSet::new();
    let mut events = EventFile::default();
    events.assets.insert("ETH".into(), Amount::ETH_DECIMALS);
    let mut seq = 1u64;
    for spec in &s.validators {
        let stake = eth(&spec.stake)?;
        set.insert(Validator::activate(&spec.id, stake, params).map_err(SimError::violation)?).map_err(SimError::violation)?;
        if s.record_deposits {
            events.events.push(
                ChainEventRecord::new(seq, s.start_time, EventKind::Purchase, "ETH", stake, s.eth_price.clone())
                    .with_meta("validator", spec.id.clone()),
            );
            seq += 1;
        }
    }

    let mut duties: Vec<&DutySpec> = s.duties.iter().collect();
    duties.sort_by_key(|d| d.epoch());
    let mut rewards: BTreeMap<String, Amount> = BTreeMap::new();
    let mut losses: BTreeMap<String, Amount> = BTreeMap::new();
    let mut undistributed = Amount::zero(Amount::ETH_DECIMALS);
    let epoch_secs = params.epoch_seconds() as i64;

    for d in duties {
        // Deposits sit at start_time; duties land at the end of their epoch.
        let ts = s.start_time + (d.epoch() as i64 + 1) * epoch_secs;
        let mut credit = |events: &mut EventFile, seq: &mut u64, id: &str, amount: Amount| -> Result<(), SimError> {
            if amount.base_units() == 0 {
                return Ok(());
            }
            let total = rewards.entry(id.into()).or_insert(Amount::zero(Amount::ETH_DECIMALS));
            *total = total.checked_add(&amount).map_err(SimError::violation)?;
            events.events.push(
                ChainEventRecord::new(*seq, ts, EventKind::StakingReward, "ETH", amount, s.eth_price.clone())
                    .with_meta("validator", id.to_string())
                    .with_meta("epoch", d.epoch().to_string()),
            );
            *seq += 1;
            Ok(())
        };
        let (id, event) = match d {
            DutySpec::Attest { validator, source, target, head, delay, .. } => {
                let votes = AttestationVotes {
                    source_correct: *source,
                    target_correct: *target,
                    head_correct: *head,
                    inclusion_delay: *delay,
                };
                let reward = set.credit_attestation(validator, &votes, params).map_err(SimError::violation)?;
                credit(&mut events, &mut seq, validator, reward)?;
                continue;
            }
            DutySpec::Distribute { amount, .. } => {
                let (paid, rest) = set.distribute(&eth(amount)?).map_err(SimError::violation)?;
                for (id, amount) in paid {
                    credit(&mut events, &mut seq, &id, amount)?;
                }
                undistributed = undistributed.checked_add(&rest).map_err(SimError::violation)?;
                continue;
            }
            DutySpec::MissedSource { validator, .. } => (validator, DutyEvent::MissedSource),
            DutySpec::MissedTarget { validator, .. } => (validator, DutyEvent::MissedTarget),
            DutySpec::MissedHead { validator, .. } => (validator, DutyEvent::MissedHead),
            DutySpec::MissedSync { validator, forgone, .. } => {
                (validator, DutyEvent::MissedSync { forgone_reward: eth(forgone)? })
            }
            DutySpec::DoubleProposal { validator, .. } => (validator, DutyEvent::DoubleProposal),
            DutySpec::DoubleVote { validator, .. } => (validator, DutyEvent::DoubleVote),
        };
        let before = set.get(id).ok_or_else(|| SimError::violation(format!("unknown validator {id}")))?.stake;
        let after = set.apply(id, event, params).map_err(SimError::violation)?.stake;
        let lost = before.checked_sub(&after).map_err(SimError::violation)?;
        if lost.base_units() > 0 {
            let total = losses.entry(id.clone()).or_insert(Amount::zero(Amount::ETH_DECIMALS));
            *total = total.checked_add(&lost).map_err(SimError::violation)?;
            let reason = if event.is_slashable() { "slashing" } else { "penalty" };
            events.events.push(
                ChainEventRecord::new(seq, ts, EventKind::Spend, "ETH", lost, s.eth_price.clone())
                    .with_meta("reason", reason)
                    .with_meta("validator", id.clone())
                    .with_meta("epoch", d.epoch().to_string()),
            );
            seq += 1;
        }
    }

    let validators: Vec<_> = set
        .iter()
        .map(|val| {
            json!({
                "id": val.id,
                "stake": val.stake.to_string(),
                "status": val.status,
                "rewards": rewards.get(&val.id).copied().unwrap_or(Amount::zero(Amount::ETH_DECIMALS)).to_string(),
                "losses": losses.get(&val.id).copied().unwrap_or(Amount::zero(Amount::ETH_DECIMALS)).to_string(),
            })
        })
        .collect();
    let state = json!({
        "active_stake": set.active_stake().map_err(SimError::violation)?.to_string(),
        "undistributed": undistributed.to_string(),
        "validators": validators,
    });
    Ok(SimRun { events, state })
}
