//! Scenario runners behind `fisc simulate`.
//!
//! Each runner reads a TOML scenario, replays it through the library and
//! returns the tax events it produced plus a JSON snapshot of the final
//! state. Runs are pure functions of the scenario, the economic config and
//! the seed.

pub mod chain;
pub mod pool;
pub mod validators;

pub use chain::{run_chain_scenario, ChainScenario, Payout};
pub use pool::{run_pool_scenario, PoolOp, PoolScenario};
pub use validators::{run_validator_scenario, DutySpec, ValidatorScenario};

use serde::de::DeserializeOwned;

use crate::tax::EventFile;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("scenario parse error: {0}")]
    Parse(crate::diag::TomlDiag),
    #[error("scenario violation: {0}")]
    Violation(String),
}

impl SimError {
    pub(crate) fn violation(e: impl std::fmt::Display) -> SimError {
        SimError::Violation(e.to_string())
    }
}

/// Events and final state of a simulation run.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub events: EventFile,
    pub state: serde_json::Value,
}

impl SimRun {
    pub fn state_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.state).expect("state serializes");
        s.push('\n');
        s
    }
}

pub(crate) fn parse_toml<T: DeserializeOwned>(text: &str) -> Result<T, SimError> {
    toml::from_str(text).map_err(|e| SimError::Parse(crate::diag::TomlDiag::new(text, &e)))
}

pub(crate) fn default_start() -> i64 {
    1_700_000_000
}
