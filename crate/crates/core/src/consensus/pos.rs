//! Proof-of-stake parameters, attestation scoring, penalties and slashing.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::amount::{Amount, AmountError};
use crate::scalar::RealScalar;
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PosError {
    #[error("validator count must be at least 1")]
    NoValidators,
    #[error("validator {0} is slashed")]
    Slashed(String),
    #[error("validator {0} is not active")]
    Inactive(String),
    #[error("unknown validator {0}")]
    Unknown(String),
    #[error("duplicate validator {0}")]
    Duplicate(String),
    #[error("stake {stake} below the activation requirement {required}")]
    InsufficientStake { stake: Amount, required: Amount },
    #[error("invalid parameter {0}")]
    InvalidParam(&'static str),
    #[error(transparent)]
    Amount(#[from] AmountError),
}

fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosParams {
    pub slot_seconds: u64,
    pub slots_per_epoch: u64,
    pub sync_committee_size: u64,
    pub sync_committee_period_epochs: u64,
    pub subnets: u64,
    /// The leak starts once more than this many epochs pass without finality.
    pub inactivity_leak_epochs: u64,
    pub activation_stake: Amount,
    #[serde(with = "crate::scalar::serde_rational")]
    pub issuance_coefficient: Rational,
    #[serde(with = "crate::scalar::serde_rational")]
    pub return_coefficient: Rational,
    /// Per-epoch rewards for each timely component, as fractions of stake.
    #[serde(with = "crate::scalar::serde_rational")]
    pub source_reward: Rational,
    #[serde(with = "crate::scalar::serde_rational")]
    pub target_reward: Rational,
    #[serde(with = "crate::scalar::serde_rational")]
    pub head_reward: Rational,
    #[serde(with = "crate::scalar::serde_rational")]
    pub source_penalty: Rational,
    #[serde(with = "crate::scalar::serde_rational")]
    pub target_penalty: Rational,
    #[serde(with = "crate::scalar::serde_rational")]
    pub slash_fraction: Rational,
}

impl Default for PosParams {
    /// Timing constants are the Ethereum beacon-chain values. The reward and
    /// penalty fractions are placeholders scaled from the 14/26/14 weighting
    /// of a 1e-5 base; override them from config.
    fn default() -> Self {
        PosParams {
            slot_seconds: 12,
            slots_per_epoch: 32,
            sync_committee_size: 512,
            sync_committee_period_epochs: 256,
            subnets: 128,
            inactivity_leak_epochs: 4,
            activation_stake: Amount::wei(32 * 10u128.pow(18)),
            issuance_coefficient: Rational::one(),
            return_coefficient: Rational::one(),
            source_reward: ratio(14, 6_400_000),
            target_reward: ratio(26, 6_400_000),
            head_reward: ratio(14, 6_400_000),
            source_penalty: ratio(14, 6_400_000),
            target_penalty: ratio(26, 6_400_000),
            slash_fraction: ratio(1, 32),
        }
    }
}

impl PosParams {
    pub fn validate(&self) -> Result<(), PosError> {
        let counts = [
            (self.slot_seconds, "slot_seconds"),
            (self.slots_per_epoch, "slots_per_epoch"),
            (self.sync_committee_size, "sync_committee_size"),
            (self.sync_committee_period_epochs, "sync_committee_period_epochs"),
            (self.subnets, "subnets"),
            (self.inactivity_leak_epochs, "inactivity_leak_epochs"),
        ];
        if let Some((_, name)) = counts.iter().find(|(v, _)| *v == 0) {
            return Err(PosError::InvalidParam(name));
        }
        if self.activation_stake.base_units() == 0 {
            return Err(PosError::InvalidParam("activation_stake"));
        }
        let fractions = [
            (&self.issuance_coefficient, "issuance_coefficient"),
            (&self.return_coefficient, "return_coefficient"),
            (&self.source_reward, "source_reward"),
            (&self.target_reward, "target_reward"),
            (&self.head_reward, "head_reward"),
            (&self.source_penalty, "source_penalty"),
            (&self.target_penalty, "target_penalty"),
            (&self.slash_fraction, "slash_fraction"),
        ];
        for (v, name) in fractions {
            if !v.is_positive() {
                return Err(PosError::InvalidParam(name));
            }
        }
        if self.slash_fraction > Rational::one() {
            return Err(PosError::InvalidParam("slash_fraction"));
        }
        Ok(())
    }

    pub fn epoch_seconds(&self) -> u64 {
        self.slot_seconds * self.slots_per_epoch
    }

    /// Share of active stake needed for finality.
    pub fn finality_quorum() -> Rational {
        ratio(2, 3)
    }

    pub fn has_finality_quorum(attesting: &Amount, active_total: &Amount) -> bool {
        if active_total.base_units() == 0 {
            return false;
        }
        attesting.base_units() * 3 >= active_total.base_units() * 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssuanceAndReturn<T> {
    pub annual_issuance: T,
    pub per_validator_return: T,
}

/// `c·√N` issuance and `c'/√N` per-validator return.
pub fn pos_issuance_and_return<T: RealScalar>(
    validator_count: u64,
    c: T,
    c_prime: T,
) -> Result<IssuanceAndReturn<T>, PosError> {
    if validator_count == 0 {
        return Err(PosError::NoValidators);
    }
    let n = T::from(validator_count).ok_or(PosError::InvalidParam("validator_count"))?;
    let root = n.sqrt();
    Ok(IssuanceAndReturn { annual_issuance: c * root, per_validator_return: c_prime / root })
}

/// `epochs_since_finality > inactivity_leak_epochs`.
pub fn inactivity_leak_active(epochs_since_finality: u64, params: &PosParams) -> bool {
    epochs_since_finality > params.inactivity_leak_epochs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttestationVotes {
    pub source_correct: bool,
    pub target_correct: bool,
    pub head_correct: bool,
    /// Slots between the attested slot and inclusion. 0 is read as 1.
    pub inclusion_delay: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardedComponents {
    pub source: bool,
    pub target: bool,
    pub head: bool,
}

impl RewardedComponents {
    pub fn is_empty(&self) -> bool {
        !(self.source || self.target || self.head)
    }

    pub fn reward_fraction(&self, params: &PosParams) -> Rational {
        let mut total = Rational::zero();
        if self.source {
            total += &params.source_reward;
        }
        if self.target {
            total += &params.target_reward;
        }
        if self.head {
            total += &params.head_reward;
        }
        total
    }
}

/// Timeliness windows: source within 5 slots, source and target within 32,
/// all three within 1. A correct, timely target vote carries its source.
pub fn attestation_score(votes: &AttestationVotes) -> RewardedComponents {
    let d = votes.inclusion_delay.max(1);
    let st = votes.source_correct && votes.target_correct && d <= 32;
    RewardedComponents {
        source: (votes.source_correct && d <= 5) || st,
        target: st,
        head: st && votes.head_correct && d <= 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidatorStatus {
    Active,
    Exiting,
    Slashed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validator {
    pub id: String,
    pub stake: Amount,
    pub effective: bool,
    pub status: ValidatorStatus,
}

impl Validator {
    /// Activates a deposit; requires at least the activation stake.
    pub fn activate(id: impl Into<String>, stake: Amount, params: &PosParams) -> Result<Validator, PosError> {
        let required = params.activation_stake;
        if stake.decimals() != required.decimals() || stake.base_units() < required.base_units() {
            return Err(PosError::InsufficientStake { stake, required });
        }
        Ok(Validator { id: id.into(), stake, effective: true, status: ValidatorStatus::Active })
    }

    pub fn earns_rewards(&self) -> bool {
        self.effective && self.status == ValidatorStatus::Active
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DutyEvent {
    MissedSource,
    MissedTarget,
    MissedHead,
    MissedSync { forgone_reward: Amount },
    DoubleProposal,
    DoubleVote,
}

impl DutyEvent {
    pub fn is_slashable(&self) -> bool {
        matches!(self, DutyEvent::DoubleProposal | DutyEvent::DoubleVote)
    }
}

fn deduct(stake: &Amount, penalty: &Amount) -> Amount {
    stake.checked_sub(penalty).unwrap_or_else(|_| Amount::zero(stake.decimals()))
}

/// Returns the validator after the event. Missed head votes cost nothing; a
/// missed sync duty costs the forgone reward; equivocation slashes.
pub fn apply_penalty_or_slash(v: &Validator, event: DutyEvent, params: &PosParams) -> Result<Validator, PosError> {
    if v.status == ValidatorStatus::Slashed {
        return Err(PosError::Slashed(v.id.clone()));
    }
    let mut out = v.clone();
    match event {
        DutyEvent::MissedHead => {}
        DutyEvent::MissedSource => out.stake = deduct(&v.stake, &v.stake.mul_floor(&params.source_penalty)?),
        DutyEvent::MissedTarget => out.stake = deduct(&v.stake, &v.stake.mul_floor(&params.target_penalty)?),
        DutyEvent::MissedSync { forgone_reward } => {
            if forgone_reward.decimals() != v.stake.decimals() {
                return Err(AmountError::DecimalsMismatch(v.stake.decimals(), forgone_reward.decimals()).into());
            }
            out.stake = deduct(&v.stake, &forgone_reward);
        }
        DutyEvent::DoubleProposal | DutyEvent::DoubleVote => {
            out.stake = deduct(&v.stake, &v.stake.mul_floor(&params.slash_fraction)?);
            out.status = ValidatorStatus::Slashed;
            out.effective = false;
        }
    }
    Ok(out)
}

/// Validators keyed by id. Slashed entries stay visible for reporting but
/// never take part in reward computations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidatorSet {
    validators: BTreeMap<String, Validator>,
}

impl ValidatorSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, v: Validator) -> Result<(), PosError> {
        if self.validators.contains_key(&v.id) {
            return Err(PosError::Duplicate(v.id));
        }
        self.validators.insert(v.id.clone(), v);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Validator> {
        self.validators.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Validator> {
        self.validators.values()
    }

    pub fn active(&self) -> impl Iterator<Item = &Validator> {
        self.validators.values().filter(|v| v.earns_rewards())
    }

    pub fn active_stake(&self) -> Result<Amount, AmountError> {
        Amount::checked_sum(self.active().map(|v| &v.stake), Amount::ETH_DECIMALS)
    }

    pub fn apply(&mut self, id: &str, event: DutyEvent, params: &PosParams) -> Result<&Validator, PosError> {
        let current = self.validators.get(id).ok_or_else(|| PosError::Unknown(id.into()))?;
        let updated = apply_penalty_or_slash(current, event, params)?;
        self.validators.insert(id.into(), updated);
        Ok(&self.validators[id])
    }

    /// Credits the attestation reward for one epoch and returns the amount.
    pub fn credit_attestation(
        &mut self,
        id: &str,
        votes: &AttestationVotes,
        params: &PosParams,
    ) -> Result<Amount, PosError> {
        let v = self.validators.get_mut(id).ok_or_else(|| PosError::Unknown(id.into()))?;
        if v.status == ValidatorStatus::Slashed {
            return Err(PosError::Slashed(id.into()));
        }
        if !v.earns_rewards() {
            return Err(PosError::Inactive(id.into()));
        }
        let reward = v.stake.mul_floor(&attestation_score(votes).reward_fraction(params))?;
        v.stake = v.stake.checked_add(&reward)?;
        Ok(reward)
    }

    /// Splits `total` across active validators pro rata to stake (floor);
    /// the rounding remainder is returned unallocated.
    pub fn distribute(&mut self, total: &Amount) -> Result<(BTreeMap<String, Amount>, Amount), PosError> {
        let stake_sum = self.active_stake()?;
        let mut paid = BTreeMap::new();
        if stake_sum.base_units() == 0 {
            return Ok((paid, *total));
        }
        let mut remainder = *total;
        for v in self.validators.values_mut().filter(|v| v.earns_rewards()) {
            let share = Rational::new(
                BigInt::from(v.stake.base_units()),
                BigInt::from(stake_sum.base_units()),
            );
            let amount = total.mul_floor(&share)?;
            v.stake = v.stake.checked_add(&amount)?;
            remainder = remainder.checked_sub(&amount)?;
            paid.insert(v.id.clone(), amount);
        }
        Ok((paid, remainder))
    }
}
