use std::path::{Path, PathBuf};
use std::str::FromStr;

use fisc_core::attribution::{run_attribution_scenario, AttribScenario, ScenarioError};
use fisc_core::consensus::{ConfigError, EconConfig};
use fisc_core::sim::{self, SimError, SimRun};
use fisc_core::tax::{compute_report_located, AccountingMethod, EventFile, JurisdictionPolicy, PolicyError};

use crate::error::CliError;
use crate::manifest::{OutputSet, RunManifest};

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn load_policy(path: Option<&Path>, manifest: &mut RunManifest) -> Result<Option<JurisdictionPolicy>, CliError> {
    let Some(path) = path else { return Ok(None) };
    let text = read(path)?;
    manifest.config(path, text.as_bytes());
    match JurisdictionPolicy::from_toml_str(&text) {
        Ok(p) => Ok(Some(p)),
        Err(PolicyError::Parse(d)) => Err(CliError::toml(path, &d)),
        Err(e) => Err(CliError::violation(path, None, e.to_string())),
    }
}

fn load_econ(path: Option<&Path>, manifest: &mut RunManifest) -> Result<EconConfig, CliError> {
    let Some(path) = path else { return Ok(EconConfig::default()) };
    let text = read(path)?;
    manifest.config(path, text.as_bytes());
    match EconConfig::from_toml_str(&text) {
        Ok(c) => Ok(c),
        Err(ConfigError::Parse(d)) => Err(CliError::toml(path, &d)),
        Err(e) => Err(CliError::violation(path, None, e.to_string())),
    }
}

/// 1-based file line of the event with `seq`; blank lines are skipped the
/// same way the parser skips them.
fn event_line(text: &str, events: &EventFile, seq: u64) -> Option<usize> {
    let idx = events.events.iter().position(|e| e.seq == seq)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .nth(idx + 1)
        .map(|(n, _)| n + 1)
}

pub fn report(events_path: &Path, method: &str, config: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("report");
    let policy = load_policy(config, &mut manifest)?.unwrap_or_default();
    let source = config.unwrap_or(events_path);
    let method = AccountingMethod::from_str(method).map_err(|e| CliError::parse(source, None, e.to_string()))?;
    if !policy.allowed_methods.contains(&method) {
        return Err(CliError::violation(source, None, format!("method {method} is not in allowed_methods")));
    }
    manifest.param("method", method);
    let text = read(events_path)?;
    manifest.input("events", events_path, text.as_bytes());
    let events = EventFile::parse(&text).map_err(|e| CliError::parse(events_path, Some(e.line), e.message))?;
    let report = compute_report_located(&events.events, &policy, method).map_err(|e| {
        let line = e.seq.and_then(|s| event_line(&text, &events, s));
        CliError::violation(events_path, line, e.error.to_string())
    })?;
    let mut outputs = OutputSet::new(out);
    outputs.add("ledger.csv", report.to_csv());
    outputs.add("totals.json", report.totals_json());
    outputs.write(manifest)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SimKind {
    Pool,
    Chain,
    Validators,
}

impl SimKind {
    fn as_str(self) -> &'static str {
        match self {
            SimKind::Pool => "pool",
            SimKind::Chain => "chain",
            SimKind::Validators => "validators",
        }
    }
}

pub fn simulate(kind: SimKind, scenario: &Path, config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<(), CliError> {
    let mut manifest = RunManifest::new(&format!("simulate {}", kind.as_str()));
    let cfg = load_econ(config, &mut manifest)?;
    let text = read(scenario)?;
    manifest.input("scenario", scenario, text.as_bytes());
    let run: Result<SimRun, SimError> = match kind {
        SimKind::Pool => sim::PoolScenario::from_toml_str(&text).and_then(|s| sim::run_pool_scenario(&s)),
        SimKind::Chain => {
            manifest.seed = seed;
            sim::ChainScenario::from_toml_str(&text).and_then(|s| sim::run_chain_scenario(&s, &cfg, seed))
        }
        SimKind::Validators => {
            sim::ValidatorScenario::from_toml_str(&text).and_then(|s| sim::run_validator_scenario(&s, &cfg))
        }
    };
    let run = run.map_err(|e| match e {
        SimError::Parse(d) => CliError::toml(scenario, &d),
        SimError::Violation(m) => CliError::violation(scenario, None, m),
    })?;
    let mut outputs = OutputSet::new(out);
    outputs.add("events.jsonl", run.events.to_jsonl());
    outputs.add("state.json", run.state_json());
    outputs.write(manifest)
}

pub fn attrib(scenario: &Path, config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("attrib");
    let policy = load_policy(config, &mut manifest)?;
    let text = read(scenario)?;
    manifest.input("scenario", scenario, text.as_bytes());
    manifest.seed = seed;
    let run = AttribScenario::from_toml_str(&text)
        .and_then(|s| run_attribution_scenario(&s, policy.as_ref(), seed))
        .map_err(|e| match e {
            ScenarioError::Parse(d) => CliError::toml(scenario, &d),
            other => CliError::violation(scenario, None, other.to_string()),
        })?;
    let mut outputs = OutputSet::new(out);
    outputs.add("trace.tsv", run.trace_tsv.clone());
    outputs.add("withholding.csv", run.withholding_csv());
    outputs.add("registrations.csv", run.registrations_csv());
    outputs.add("events.jsonl", run.events.to_jsonl());
    outputs.add("travel_records.json", run.travel_json());
    outputs.add("anomalies.json", run.anomalies_json());
    outputs.write(manifest)
}

pub fn config_path(flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.filter(|p| !p.as_os_str().is_empty())
}
