//! Closed-form PoW/PoS economics and MEV payment accounting.

pub mod config;
pub mod mev;
pub mod mining;
pub mod pos;
pub mod retarget;
pub mod subsidy;

pub use config::{ConfigError, EconConfig};
pub use mev::{mev_net_builder_fee, MevBlockAccounting};
pub use mining::{
    collision_time_years, expected_blocks_exact, mining_expectation, pool_share_valid, MinerExpectation, MiningError,
};
pub use pos::{
    apply_penalty_or_slash, attestation_score, inactivity_leak_active, pos_issuance_and_return, AttestationVotes,
    DutyEvent, IssuanceAndReturn, PosError, PosParams, RewardedComponents, Validator, ValidatorSet, ValidatorStatus,
};
pub use retarget::{retarget_difficulty, RetargetError, RetargetRule};
pub use subsidy::{block_subsidy, RewardSchedule};
