//! TOML-driven attribution scenarios.
//!
//! ```toml
//! seed = 42
//! deadline_ticks = 4
//! scheme = "mock"            # or "secp256k1"
//! jurisdictions = ["J1", "J2"]
//!
//! [eoi]
//! allow = [["J1", "J2"]]     # J2 answers queries from J1
//!
//! [[links]]
//! from = "J2"
//! to = "J1"
//! latency = 2
//! drop = 0.0
//!
//! [[taxpayers]]
//! tin = "A-1"
//! jurisdiction = "J1"
//! name = "Alice"
//! wallets = ["main"]
//! physical_id = { kind = "national_id", value = "X-1" }
//!
//! [[transfers]]
//! from = "A-1/main"
//! to = "B-7/cold"            # or to_address = "1..."
//! amount = "0.5"
//! fmv_unit = "30000"
//! expect = "affirmed"
//! ```
//!
//! Without a `registrations` list every wallet is registered honestly.
//! `[policy]` may carry withholding rates; a policy passed to the runner
//! takes precedence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::authority::{Eoi, OwnershipProof};
use super::bus::LinkConfig;
use super::network::{Anomaly, AttributionError, Credentials, Network, TransferRequest};
use super::travel::{PhysicalId, TravelRuleRecord};
use crate::amount::Amount;
use crate::ledger::{Address, MockScheme, Secp256k1Scheme, SecretKey, Signature, SignatureScheme};
use crate::scalar::{format_exact, serde_rational};
use crate::tax::{AttributionResult, EventFile, JurisdictionPolicy};
use crate::Rational;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeChoice {
    #[default]
    Mock,
    Secp256k1,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalletFormat {
    #[default]
    P2pkh,
    Bech32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tamper {
    #[default]
    None,
    WalletSignature,
    DscSignature,
    /// Proof signed by a key that does not control the address.
    WrongKey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegistrationExpect {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EoiSpec {
    #[serde(default)]
    pub allow: Vec<[String; 2]>,
    #[serde(default)]
    pub deny: Vec<[String; 2]>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub from: String,
    pub to: String,
    #[serde(default = "one")]
    pub latency: u64,
    #[serde(default)]
    pub drop: f64,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxpayerSpec {
    pub tin: String,
    pub jurisdiction: String,
    pub name: String,
    pub wallets: Vec<String>,
    #[serde(default)]
    pub physical_id: Option<PhysicalId>,
    #[serde(default)]
    pub wallet_format: WalletFormat,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistrationSpec {
    /// `tin/wallet`.
    pub wallet: String,
    #[serde(default)]
    pub tamper: Tamper,
    #[serde(default)]
    pub expect: Option<RegistrationExpect>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferSpec {
    /// `tin/wallet` of the sender.
    pub from: String,
    /// `tin/wallet` of the recipient, or use `to_address`.
    #[serde(default)]
    pub to: Option<String>,
    #[serde(default)]
    pub to_address: Option<String>,
    #[serde(default)]
    pub beneficiary_name: Option<String>,
    pub amount: String,
    #[serde(default = "btc")]
    pub asset: String,
    #[serde(default = "eight")]
    pub decimals: u8,
    #[serde(with = "serde_rational")]
    pub fmv_unit: Rational,
    #[serde(default)]
    pub expect: Option<AttributionResult>,
}

fn btc() -> String {
    "BTC".into()
}

fn eight() -> u8 {
    8
}

fn default_deadline() -> u64 {
    4
}

fn default_start() -> i64 {
    1_700_000_000
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttribScenario {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_deadline")]
    pub deadline_ticks: u64,
    #[serde(default)]
    pub scheme: SchemeChoice,
    /// Unix time of tick 0; event timestamps advance one second per tick.
    #[serde(default = "default_start")]
    pub start_time: i64,
    #[serde(default)]
    pub policy: Option<JurisdictionPolicy>,
    pub jurisdictions: Vec<String>,
    #[serde(default)]
    pub eoi: EoiSpec,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
    pub taxpayers: Vec<TaxpayerSpec>,
    #[serde(default)]
    pub registrations: Option<Vec<RegistrationSpec>>,
    #[serde(default)]
    pub transfers: Vec<TransferSpec>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(crate::diag::TomlDiag),
    #[error("scenario violation: {0}")]
    Violation(String),
    #[error("scenario violation: {0}")]
    Attribution(#[from] AttributionError),
}

impl AttribScenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(crate::diag::TomlDiag::new(text, &e)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WithholdingRow {
    pub seq: u64,
    pub tick: u64,
    pub from: String,
    pub to: String,
    pub asset: String,
    pub amount: String,
    pub result: AttributionResult,
    pub jurisdiction: String,
    pub rate: String,
    pub withheld: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegistrationRow {
    pub tin: String,
    pub wallet: String,
    pub address: String,
    pub jurisdiction: String,
    pub accepted: bool,
    pub reason: String,
}

/// Everything a scenario run produces.
#[derive(Debug, Clone)]
pub struct AttribRun {
    pub trace_tsv: String,
    pub withholding: Vec<WithholdingRow>,
    pub registrations: Vec<RegistrationRow>,
    pub events: EventFile,
    pub travel_records: Vec<TravelRuleRecord>,
    pub anomalies: Vec<Anomaly>,
}

impl AttribRun {
    pub fn withholding_csv(&self) -> String {
        rows_to_csv(&self.withholding)
    }

    pub fn registrations_csv(&self) -> String {
        rows_to_csv(&self.registrations)
    }

    pub fn travel_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.travel_records).expect("records serialize");
        s.push('\n');
        s
    }

    pub fn anomalies_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.anomalies).expect("anomalies serialize");
        s.push('\n');
        s
    }
}

fn rows_to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

struct Wallet {
    tin: String,
    secret: SecretKey,
    address: Address,
}

fn key(parts: &[&str]) -> SecretKey {
    SecretKey::from_seed(parts.join("/").as_bytes())
}

/// Runs the scenario. `policy` overrides the scenario's own `[policy]`; the
/// seed override replaces the scenario seed.
pub fn run_attribution_scenario(
    scenario: &AttribScenario,
    policy: Option<&JurisdictionPolicy>,
    seed: Option<u64>,
) -> Result<AttribRun, ScenarioError> {
    let violation = |m: String| ScenarioError::Violation(m);
    let policy = policy.cloned().or_else(|| scenario.policy.clone()).unwrap_or_default();
    policy.validate().map_err(|e| violation(e.to_string()))?;
    let scheme: Box<dyn SignatureScheme> = match scenario.scheme {
        SchemeChoice::Mock => Box::new(MockScheme),
        SchemeChoice::Secp256k1 => Box::new(Secp256k1Scheme),
    };
    let mut net = Network::new(scheme, seed.unwrap_or(scenario.seed));
    for code in &scenario.jurisdictions {
        net.add_authority(code, key(&["authority", code]))?;
    }
    let known = |code: &str| scenario.jurisdictions.iter().any(|j| j == code);
    for (list, value) in [(&scenario.eoi.allow, Eoi::Allow), (&scenario.eoi.deny, Eoi::Deny)] {
        for [a, b] in list {
            if !known(a) || !known(b) {
                return Err(violation(format!("eoi entry {a}->{b} names an unknown jurisdiction")));
            }
            net.eoi_mut().set(a, b, value);
        }
    }
    for l in &scenario.links {
        if !known(&l.from) || !known(&l.to) {
            return Err(violation(format!("link {}->{} names an unknown jurisdiction", l.from, l.to)));
        }
        if !(0.0..=1.0).contains(&l.drop) {
            return Err(violation(format!("link {}->{} drop must lie in [0, 1]", l.from, l.to)));
        }
        net.bus_mut().set_link(&l.from, &l.to, LinkConfig { latency: l.latency, drop: l.drop });
    }

    let mut creds: BTreeMap<String, Credentials> = BTreeMap::new();
    let mut people: BTreeMap<String, &TaxpayerSpec> = BTreeMap::new();
    let mut wallets: BTreeMap<String, Wallet> = BTreeMap::new();
    for tp in &scenario.taxpayers {
        let holder = key(&["holder", &tp.tin]);
        let dsc = net.issue_dsc(&tp.jurisdiction, &tp.tin, net.scheme().public_key(&holder))?;
        creds.insert(tp.tin.clone(), Credentials { dsc, holder_secret: holder });
        people.insert(tp.tin.clone(), tp);
        for w in &tp.wallets {
            let secret = key(&["wallet", &tp.tin, w]);
            let pk = net.scheme().public_key(&secret);
            let address = match tp.wallet_format {
                WalletFormat::P2pkh => Address::p2pkh_from_pubkey(&pk.0),
                WalletFormat::Bech32 => Address::bech32_from_pubkey(&pk.0),
            };
            wallets.insert(format!("{}/{}", tp.tin, w), Wallet { tin: tp.tin.clone(), secret, address });
        }
    }

    let plan: Vec<RegistrationSpec> = match &scenario.registrations {
        Some(list) => list.clone(),
        None => wallets
            .keys()
            .map(|w| RegistrationSpec { wallet: w.clone(), tamper: Tamper::None, expect: None })
            .collect(),
    };
    let mut registrations = Vec::new();
    for (i, r) in plan.iter().enumerate() {
        let w = wallets.get(&r.wallet).ok_or_else(|| violation(format!("unknown wallet {}", r.wallet)))?;
        let tp = people[&w.tin];
        let holder = &creds[&w.tin].holder_secret;
        let challenge = format!("register/{i}/{}", r.wallet);
        let mut proof = OwnershipProof::create(net.scheme(), &w.tin, w.address.clone(), &w.secret, holder, challenge.as_bytes());
        match r.tamper {
            Tamper::None => {}
            Tamper::WalletSignature => flip(&mut proof.wallet_signature),
            Tamper::DscSignature => flip(&mut proof.dsc_signature),
            Tamper::WrongKey => {
                let other = key(&["intruder", &r.wallet]);
                proof = OwnershipProof::create(net.scheme(), &w.tin, w.address.clone(), &other, holder, challenge.as_bytes());
            }
        }
        let outcome = net.register_ownership(&tp.jurisdiction, proof);
        let (accepted, reason) = match &outcome {
            Ok(()) => (true, String::new()),
            Err(AttributionError::Rejected { reason, .. }) => (false, reason.to_string()),
            Err(e) => return Err(violation(e.to_string())),
        };
        match (r.expect, accepted) {
            (Some(RegistrationExpect::Accepted), false) | (Some(RegistrationExpect::Rejected), true) => {
                return Err(violation(format!(
                    "registration of {} expected {:?}, got {}",
                    r.wallet,
                    r.expect.expect("matched Some"),
                    if accepted { "accepted" } else { "rejected" }
                )));
            }
            _ => {}
        }
        registrations.push(RegistrationRow {
            tin: w.tin.clone(),
            wallet: r.wallet.clone(),
            address: w.address.text.clone(),
            jurisdiction: tp.jurisdiction.clone(),
            accepted,
            reason,
        });
    }

    let mut events = EventFile::default();
    let mut withholding = Vec::new();
    let mut travel_records = Vec::new();
    for (i, t) in scenario.transfers.iter().enumerate() {
        let from = wallets.get(&t.from).ok_or_else(|| violation(format!("unknown wallet {}", t.from)))?;
        let sender = people[&from.tin];
        let (to_address, to_name) = match (&t.to, &t.to_address) {
            (Some(label), None) => {
                let w = wallets.get(label).ok_or_else(|| violation(format!("unknown wallet {label}")))?;
                (w.address.text.clone(), people[&w.tin].name.clone())
            }
            (None, Some(addr)) => (addr.clone(), String::new()),
            _ => return Err(violation(format!("transfer {} needs exactly one of to / to_address", i + 1))),
        };
        let amount = Amount::from_decimal_str(&t.amount, t.decimals).map_err(|e| violation(e.to_string()))?;
        let tick = net.bus_mut().now();
        let req = TransferRequest {
            seq: i as u64 + 1,
            timestamp: scenario.start_time + tick as i64,
            origin: sender.jurisdiction.clone(),
            from_address: from.address.text.clone(),
            to_address: to_address.clone(),
            asset: t.asset.clone(),
            amount,
            fmv_unit: t.fmv_unit.clone(),
            originator_name: sender.name.clone(),
            originator_physical_id: sender.physical_id.clone(),
            beneficiary_name: t.beneficiary_name.clone().unwrap_or(to_name),
            deadline_ticks: scenario.deadline_ticks,
        };
        let out = net.originate_transfer(&req, &creds[&from.tin], &policy)?;
        if let Some(want) = t.expect {
            if want != out.query.result {
                return Err(violation(format!("transfer {} expected {want:?}, got {:?}", req.seq, out.query.result)));
            }
        }
        withholding.push(WithholdingRow {
            seq: req.seq,
            tick,
            from: req.from_address.clone(),
            to: to_address,
            asset: t.asset.clone(),
            amount: amount.to_string(),
            result: out.query.result,
            jurisdiction: out.query.jurisdiction.clone().unwrap_or_default(),
            rate: format_exact(out.query.result.rate(&policy)),
            withheld: out.withholding.to_string(),
        });
        if let Some(&d) = events.assets.get(&t.asset) {
            if d != t.decimals {
                return Err(violation(format!("asset {} used with decimals {} and {}", t.asset, d, t.decimals)));
            }
        }
        events.assets.insert(t.asset.clone(), t.decimals);
        events.events.push(out.event);
        travel_records.extend(out.travel_record);
        // One idle tick between transfers keeps trace ticks distinct.
        let next = net.bus_mut().now() + 1;
        net.bus_mut().advance_to(next);
    }

    Ok(AttribRun {
        trace_tsv: net.render_trace(),
        withholding,
        registrations,
        events,
        travel_records,
        anomalies: net.anomalies().to_vec(),
    })
}

fn flip(sig: &mut Signature) {
    match sig.0.first_mut() {
        Some(b) => *b ^= 0x01,
        None => sig.0.push(1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCENARIO: &str = r#"
seed = 5
jurisdictions = ["J1", "J2", "J3"]

[eoi]
allow = [["J1", "J2"]]

[[taxpayers]]
tin = "A"
jurisdiction = "J1"
name = "Alice"
wallets = ["main"]
physical_id = { kind = "national_id", value = "X-1" }

[[taxpayers]]
tin = "B"
jurisdiction = "J2"
name = "Bob"
wallets = ["main"]
wallet_format = "bech32"

[[taxpayers]]
tin = "C"
jurisdiction = "J3"
name = "Carol"
wallets = ["main"]

[[transfers]]
from = "A/main"
to = "B/main"
amount = "1"
fmv_unit = "30000"
expect = "affirmed"

[[transfers]]
from = "A/main"
to = "C/main"
amount = "1"
fmv_unit = "30000"
expect = "unaffirmed"
"#;

    #[test]
    fn scenario_end_to_end() {
        let s = AttribScenario::from_toml_str(SCENARIO).unwrap();
        let run = run_attribution_scenario(&s, None, None).unwrap();
        assert_eq!(run.withholding.len(), 2);
        assert_eq!(run.withholding[0].withheld, "0.1");
        assert_eq!(run.withholding[1].withheld, "0.3");
        assert_eq!(run.travel_records.len(), 1);
        assert_eq!(run.registrations.iter().filter(|r| r.accepted).count(), 3);
        assert!(run.withholding_csv().starts_with("seq,tick,from,to,asset,amount,result,jurisdiction,rate,withheld\n"));
        let again = run_attribution_scenario(&s, None, None).unwrap();
        assert_eq!(run.trace_tsv, again.trace_tsv);
    }

    #[test]
    fn expectations_are_enforced() {
        let text = SCENARIO.replace("expect = \"unaffirmed\"", "expect = \"affirmed\"");
        let s = AttribScenario::from_toml_str(&text).unwrap();
        assert!(matches!(run_attribution_scenario(&s, None, None), Err(ScenarioError::Violation(_))));
    }

    #[test]
    fn tampered_registrations() {
        let mut s = AttribScenario::from_toml_str(SCENARIO).unwrap();
        s.transfers.clear();
        s.registrations = Some(vec![
            RegistrationSpec { wallet: "A/main".into(), tamper: Tamper::WalletSignature, expect: Some(RegistrationExpect::Rejected) },
            RegistrationSpec { wallet: "B/main".into(), tamper: Tamper::DscSignature, expect: Some(RegistrationExpect::Rejected) },
            RegistrationSpec { wallet: "C/main".into(), tamper: Tamper::WrongKey, expect: Some(RegistrationExpect::Rejected) },
        ]);
        let run = run_attribution_scenario(&s, None, None).unwrap();
        assert!(run.registrations.iter().all(|r| !r.accepted));
    }

    #[test]
    fn unknown_fields_fail_to_parse() {
        assert!(matches!(
            AttribScenario::from_toml_str("jurisdictions = []\ntaxpayers = []\nbogus = 1"),
            Err(ScenarioError::Parse(_))
        ));
    }
}
