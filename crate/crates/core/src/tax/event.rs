//! Normalized chain events and the line-delimited event file.
//!
//! The first line declares asset decimals, every following line is one
//! record:
//!
//! ```text
//! {"assets":{"BTC":8}}
//! {"seq":1,"timestamp":1600000000,"kind":"mining_reward","asset":"BTC","quantity":"50000000","fmv_unit":"40000"}
//! ```
//!
//! `quantity` is in integer base units. `timestamp` is unix seconds or an
//! RFC 3339 string. `specid_lot` names lots by the `seq` of the event that
//! created them (`3`, `"3,7"` or `[3,7]`).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::amount::Amount;
use crate::scalar::format_exact;
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Purchase,
    MiningReward,
    PoolPayout,
    StakingReward,
    Airdrop,
    ForkReceipt,
    IcoAllocation,
    NftRoyalty,
    LpDeposit,
    LpWithdrawal,
    VaultLiquidation,
    MevPayout,
    Sale,
    Swap,
    Spend,
    Gift,
    SelfTransfer,
}

impl EventKind {
    pub const ALL: [EventKind; 17] = [
        EventKind::Purchase,
        EventKind::MiningReward,
        EventKind::PoolPayout,
        EventKind::StakingReward,
        EventKind::Airdrop,
        EventKind::ForkReceipt,
        EventKind::IcoAllocation,
        EventKind::NftRoyalty,
        EventKind::LpDeposit,
        EventKind::LpWithdrawal,
        EventKind::VaultLiquidation,
        EventKind::MevPayout,
        EventKind::Sale,
        EventKind::Swap,
        EventKind::Spend,
        EventKind::Gift,
        EventKind::SelfTransfer,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Purchase => "purchase",
            EventKind::MiningReward => "mining_reward",
            EventKind::PoolPayout => "pool_payout",
            EventKind::StakingReward => "staking_reward",
            EventKind::Airdrop => "airdrop",
            EventKind::ForkReceipt => "fork_receipt",
            EventKind::IcoAllocation => "ico_allocation",
            EventKind::NftRoyalty => "nft_royalty",
            EventKind::LpDeposit => "lp_deposit",
            EventKind::LpWithdrawal => "lp_withdrawal",
            EventKind::VaultLiquidation => "vault_liquidation",
            EventKind::MevPayout => "mev_payout",
            EventKind::Sale => "sale",
            EventKind::Swap => "swap",
            EventKind::Spend => "spend",
            EventKind::Gift => "gift",
            EventKind::SelfTransfer => "self_transfer",
        }
    }

    pub fn parse(text: &str) -> Option<EventKind> {
        EventKind::ALL.into_iter().find(|k| k.as_str() == text)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainEventRecord {
    pub seq: u64,
    /// Unix seconds, UTC.
    pub timestamp: i64,
    pub kind: EventKind,
    pub asset: String,
    pub quantity: Amount,
    /// Fair market value of one whole unit in the reference currency.
    pub fmv_unit: Rational,
    pub counterparty_address: Option<String>,
    pub specid_lot: Vec<u64>,
    pub metadata: BTreeMap<String, String>,
}

impl ChainEventRecord {
    pub fn new(seq: u64, timestamp: i64, kind: EventKind, asset: &str, quantity: Amount, fmv_unit: Rational) -> Self {
        ChainEventRecord {
            seq,
            timestamp,
            kind,
            asset: asset.into(),
            quantity,
            fmv_unit,
            counterparty_address: None,
            specid_lot: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    /// `quantity × fmv_unit`.
    pub fn fmv_total(&self) -> Rational {
        self.quantity.to_rational() * &self.fmv_unit
    }

    fn to_raw(&self) -> RawRecord {
        RawRecord {
            seq: self.seq,
            timestamp: RawTimestamp::Unix(self.timestamp),
            kind: self.kind.as_str().into(),
            asset: self.asset.clone(),
            quantity: RawInt::Text(self.quantity.base_units().to_string()),
            fmv_unit: format_exact(&self.fmv_unit),
            counterparty_address: self.counterparty_address.clone(),
            specid_lot: if self.specid_lot.is_empty() { None } else { Some(RawLots::List(self.specid_lot.clone())) },
            metadata: self.metadata.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct EventParseError {
    pub line: usize,
    pub message: String,
}

impl EventParseError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        EventParseError { line, message: message.into() }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    assets: BTreeMap<String, u8>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawTimestamp {
    Unix(i64),
    Text(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawInt {
    Int(u64),
    Text(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawLots {
    One(u64),
    List(Vec<u64>),
    Text(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    seq: u64,
    timestamp: RawTimestamp,
    kind: String,
    asset: String,
    quantity: RawInt,
    #[serde(default = "zero_text")]
    fmv_unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    counterparty_address: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    specid_lot: Option<RawLots>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    metadata: BTreeMap<String, String>,
}

fn zero_text() -> String {
    "0".into()
}

/// A parsed event file: asset decimals and records in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventFile {
    pub assets: BTreeMap<String, u8>,
    pub events: Vec<ChainEventRecord>,
}

impl EventFile {
    pub fn parse(text: &str) -> Result<EventFile, EventParseError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let Some((idx, first)) = lines.next() else {
            return Ok(EventFile::default());
        };
        let header: Header =
            serde_json::from_str(first).map_err(|e| EventParseError::at(idx + 1, format!("bad header: {e}")))?;
        let mut file = EventFile { assets: header.assets, events: Vec::new() };
        for (idx, line) in lines {
            let line_no = idx + 1;
            let raw: RawRecord = serde_json::from_str(line).map_err(|e| EventParseError::at(line_no, e.to_string()))?;
            file.events.push(file.convert(raw, line_no)?);
        }
        Ok(file)
    }

    fn convert(&self, raw: RawRecord, line: usize) -> Result<ChainEventRecord, EventParseError> {
        let err = |m: String| EventParseError::at(line, m);
        let kind = EventKind::parse(&raw.kind).ok_or_else(|| err(format!("unknown kind {:?}", raw.kind)))?;
        let decimals = *self
            .assets
            .get(&raw.asset)
            .ok_or_else(|| err(format!("asset {:?} missing from header", raw.asset)))?;
        let base_units = match raw.quantity {
            RawInt::Int(v) => v as u128,
            RawInt::Text(s) => s.trim().parse::<u128>().map_err(|_| err(format!("bad quantity {s:?}")))?,
        };
        let timestamp = match raw.timestamp {
            RawTimestamp::Unix(t) => t,
            RawTimestamp::Text(s) => chrono::DateTime::parse_from_rfc3339(&s)
                .map_err(|e| err(format!("bad timestamp {s:?}: {e}")))?
                .timestamp(),
        };
        let fmv_unit = crate::scalar::parse_rational(&raw.fmv_unit).map_err(|e| err(e.to_string()))?;
        if fmv_unit < Rational::from_integer(0.into()) {
            return Err(err("negative fmv_unit".into()));
        }
        let specid_lot = match raw.specid_lot {
            None => Vec::new(),
            Some(RawLots::One(v)) => vec![v],
            Some(RawLots::List(v)) => v,
            Some(RawLots::Text(s)) => s
                .split(',')
                .map(|p| p.trim().parse::<u64>().map_err(|_| err(format!("bad specid_lot {s:?}"))))
                .collect::<Result<_, _>>()?,
        };
        Ok(ChainEventRecord {
            seq: raw.seq,
            timestamp,
            kind,
            asset: raw.asset,
            quantity: Amount::new(base_units, decimals),
            fmv_unit,
            counterparty_address: raw.counterparty_address,
            specid_lot,
            metadata: raw.metadata,
        })
    }

    /// Renders the header and one JSON line per record.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&Header { assets: self.assets.clone() }).expect("header serializes");
        out.push('\n');
        for e in &self.events {
            out.push_str(&serde_json::to_string(&e.to_raw()).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{"assets":{"BTC":8,"ETH":18}}
{"seq":1,"timestamp":1600000000,"kind":"mining_reward","asset":"BTC","quantity":"50000000","fmv_unit":"40000"}

{"seq":2,"timestamp":"2020-10-01T00:00:00Z","kind":"sale","asset":"BTC","quantity":25000000,"fmv_unit":"45000.5","specid_lot":"1","metadata":{"note":"x"}}
"#;

    #[test]
    fn parses_and_round_trips() {
        let f = EventFile::parse(SAMPLE).unwrap();
        assert_eq!(f.events.len(), 2);
        assert_eq!(f.events[0].kind, EventKind::MiningReward);
        assert_eq!(f.events[0].quantity, Amount::sats(50_000_000));
        assert_eq!(f.events[1].timestamp, 1_601_510_400);
        assert_eq!(f.events[1].specid_lot, vec![1]);
        let again = EventFile::parse(&f.to_jsonl()).unwrap();
        assert_eq!(again, f);
    }

    #[test]
    fn errors_name_the_line() {
        let bad = "{\"assets\":{\"BTC\":8}}\n{\"seq\":1,\"timestamp\":0,\"kind\":\"teleport\",\"asset\":\"BTC\",\"quantity\":\"1\"}";
        let e = EventFile::parse(bad).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("teleport"));
        let e = EventFile::parse("{\"assets\":{}}\n\n\n{\"seq\":1}").unwrap_err();
        assert_eq!(e.line, 4);
    }

    #[test]
    fn empty_file() {
        assert!(EventFile::parse("").unwrap().events.is_empty());
    }

    #[test]
    fn kinds_round_trip() {
        for k in EventKind::ALL {
            assert_eq!(EventKind::parse(k.as_str()), Some(k));
        }
    }
}
