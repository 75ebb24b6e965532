//! Flat `key = value` parameter file for the economic models.
//!
//! Every key is optional; missing keys keep their defaults. Amounts are
//! decimal strings in whole units, fractions accept `"1/32"`, `"0.03125"` or
//! bare numbers.
//!
//! ```toml
//! initial_subsidy = "50"
//! halving_interval_blocks = 210000
//! supply_cap = "21000000"
//! window_blocks = 2016
//! target_block_interval = 600
//! clamp_factor = 4
//! slot_seconds = 12
//! slots_per_epoch = 32
//! sync_committee_size = 512
//! sync_committee_period_epochs = 256
//! subnets = 128
//! inactivity_leak_epochs = 4
//! activation_stake = "32"
//! issuance_coefficient = 1
//! return_coefficient = 1
//! source_reward = "14/6400000"
//! target_reward = "26/6400000"
//! head_reward = "14/6400000"
//! source_penalty = "14/6400000"
//! target_penalty = "26/6400000"
//! slash_fraction = "1/32"
//! ```

use std::path::Path;

use serde::Deserialize;

use super::pos::{PosError, PosParams};
use super::retarget::RetargetRule;
use super::subsidy::RewardSchedule;
use crate::amount::{Amount, AmountError};
use crate::Rational;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(crate::diag::TomlDiag),
    #[error("invalid value for {key}: {source}")]
    Amount { key: &'static str, source: AmountError },
    #[error(transparent)]
    Pos(#[from] PosError),
    #[error("invalid value for {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EconConfig {
    pub schedule: RewardSchedule,
    pub retarget: RetargetRule,
    pub pos: PosParams,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    initial_subsidy: Option<String>,
    halving_interval_blocks: Option<u64>,
    supply_cap: Option<String>,
    window_blocks: Option<u64>,
    target_block_interval: Option<u64>,
    #[serde(default, with = "crate::scalar::serde_rational::option")]
    clamp_factor: Option<Rational>,
    slot_seconds: Option<u64>,
    slots_per_epoch: Option<u64>,
    sync_committee_size: Option<u64>,
    sync_committee_period_epochs: Option<u64>,
    subnets: Option<u64>,
    inactivity_leak_epochs: Option<u64>,
    activation_stake: Option<String>,
    #[serde(default, with = "crate::scalar::serde_rational::option")]
    issuance_coefficient: Option<Rational>,
    #[serde(default, with = "crate::scalar::serde_rational::option")]
    return_coefficient: Option<Rational>,
    #[serde(default, with = "crate::scalar::serde_rational::option")]
    source_reward: Option<Rational>,
    #[serde(default, with = "crate::scalar::serde_rational::option")]
    target_reward: Option<Rational>,
    #[serde(default, with = "crate::scalar::serde_rational::option")]
    head_reward: Option<Rational>,
    #[serde(default, with = "crate::scalar::serde_rational::option")]
    source_penalty: Option<Rational>,
    #[serde(default, with = "crate::scalar::serde_rational::option")]
    target_penalty: Option<Rational>,
    #[serde(default, with = "crate::scalar::serde_rational::option")]
    slash_fraction: Option<Rational>,
}

fn amount(key: &'static str, text: &str, decimals: u8) -> Result<Amount, ConfigError> {
    Amount::from_decimal_str(text, decimals).map_err(|source| ConfigError::Amount { key, source })
}

impl EconConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(crate::diag::TomlDiag::new(text, &e)))?;
        let mut cfg = EconConfig::default();
        let s = &mut cfg.schedule;
        if let Some(v) = raw.initial_subsidy {
            s.initial_subsidy = amount("initial_subsidy", &v, Amount::BTC_DECIMALS)?;
        }
        if let Some(v) = raw.halving_interval_blocks {
            s.halving_interval_blocks = v;
        }
        if let Some(v) = raw.supply_cap {
            s.supply_cap = amount("supply_cap", &v, Amount::BTC_DECIMALS)?;
        }
        let r = &mut cfg.retarget;
        r.window_blocks = raw.window_blocks.unwrap_or(r.window_blocks);
        r.target_block_interval_secs = raw.target_block_interval.unwrap_or(r.target_block_interval_secs);
        if let Some(v) = raw.clamp_factor {
            r.clamp_factor = v;
        }
        let p = &mut cfg.pos;
        p.slot_seconds = raw.slot_seconds.unwrap_or(p.slot_seconds);
        p.slots_per_epoch = raw.slots_per_epoch.unwrap_or(p.slots_per_epoch);
        p.sync_committee_size = raw.sync_committee_size.unwrap_or(p.sync_committee_size);
        p.sync_committee_period_epochs = raw.sync_committee_period_epochs.unwrap_or(p.sync_committee_period_epochs);
        p.subnets = raw.subnets.unwrap_or(p.subnets);
        p.inactivity_leak_epochs = raw.inactivity_leak_epochs.unwrap_or(p.inactivity_leak_epochs);
        if let Some(v) = raw.activation_stake {
            p.activation_stake = amount("activation_stake", &v, Amount::ETH_DECIMALS)?;
        }
        let fractions = [
            (raw.issuance_coefficient, &mut p.issuance_coefficient),
            (raw.return_coefficient, &mut p.return_coefficient),
            (raw.source_reward, &mut p.source_reward),
            (raw.target_reward, &mut p.target_reward),
            (raw.head_reward, &mut p.head_reward),
            (raw.source_penalty, &mut p.source_penalty),
            (raw.target_penalty, &mut p.target_penalty),
            (raw.slash_fraction, &mut p.slash_fraction),
        ];
        for (value, slot) in fractions {
            if let Some(v) = value {
                *slot = v;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schedule.halving_interval_blocks == 0 {
            return Err(ConfigError::Invalid("halving_interval_blocks"));
        }
        if self.retarget.window_blocks == 0 {
            return Err(ConfigError::Invalid("window_blocks"));
        }
        if self.retarget.target_block_interval_secs == 0 {
            return Err(ConfigError::Invalid("target_block_interval"));
        }
        if self.retarget.clamp_factor < num_traits::One::one() {
            return Err(ConfigError::Invalid("clamp_factor"));
        }
        self.pos.validate()?;
        Ok(())
    }
}
