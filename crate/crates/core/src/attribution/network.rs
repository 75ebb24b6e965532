//! Authorities wired to a message bus: registration, jurisdiction queries and
//! transfer origination.

use std::collections::BTreeMap;

use serde::Serialize;

use super::authority::{framed, DigitalSignatureCertificate, DuplicateTin, EoiMatrix, OwnershipProof, Rejection, TaxAuthority};
use super::bus::{Envelope, MessageBus, Message, TraceEntry};
use super::travel::{build_travel_rule_record, PhysicalId, TravelRuleError, TravelRuleRecord};
use crate::amount::{Amount, AmountError};
use crate::ledger::{sha256, Address, AddressError, PublicKey, SecretKey, SignatureScheme};
use crate::scalar::format_exact;
use crate::tax::{withholding_amount, AttributionResult, ChainEventRecord, EventKind, JurisdictionPolicy};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AttributionError {
    #[error("unknown jurisdiction {0}")]
    UnknownJurisdiction(String),
    #[error("jurisdiction {0} already exists")]
    DuplicateJurisdiction(String),
    #[error(transparent)]
    DuplicateTin(#[from] DuplicateTin),
    #[error("registration of {address} refused: {reason}")]
    Rejected { address: String, reason: Rejection },
    #[error("origin address {0} is not registered to the sender")]
    UnregisteredOrigin(String),
    #[error("beneficiary address: {0}")]
    InvalidBeneficiary(#[from] AddressError),
    #[error(transparent)]
    Amount(#[from] AmountError),
    #[error(transparent)]
    TravelRule(#[from] TravelRuleError),
}

/// A taxpayer's certificate and the key it certifies.
#[derive(Debug, Clone)]
pub struct Credentials {
    pub dsc: DigitalSignatureCertificate,
    pub holder_secret: SecretKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Anomaly {
    pub tick: u64,
    pub actor: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryOutcome {
    pub query_id: u64,
    pub result: AttributionResult,
    /// Lowest affirming jurisdiction code, if any.
    pub jurisdiction: Option<String>,
    pub affirmed_by: Vec<String>,
    pub late: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct TransferRequest {
    pub seq: u64,
    pub timestamp: i64,
    pub origin: String,
    pub from_address: String,
    pub to_address: String,
    pub asset: String,
    pub amount: Amount,
    pub fmv_unit: Rational,
    pub originator_name: String,
    pub originator_physical_id: Option<PhysicalId>,
    pub beneficiary_name: String,
    pub deadline_ticks: u64,
}

#[derive(Debug, Clone)]
pub struct TransferOutcome {
    pub query: QueryOutcome,
    /// Withheld quantity of the transferred asset.
    pub withholding: Amount,
    pub event: ChainEventRecord,
    pub travel_record: Option<TravelRuleRecord>,
}

fn query_bytes(query_id: u64, asker: &str, address: &str) -> Vec<u8> {
    framed("query", &[&query_id.to_be_bytes(), asker.as_bytes(), address.as_bytes()])
}

fn response_bytes(query_id: u64, responder: &str, address: &str) -> Vec<u8> {
    framed("resp", &[&query_id.to_be_bytes(), responder.as_bytes(), address.as_bytes()])
}

fn short_digest(bytes: &[u8]) -> String {
    sha256(bytes).to_hex()[..16].to_string()
}

pub struct Network {
    scheme: Box<dyn SignatureScheme>,
    authorities: BTreeMap<String, TaxAuthority>,
    eoi: EoiMatrix,
    bus: MessageBus,
    next_query: u64,
    anomalies: Vec<Anomaly>,
}

impl Network {
    pub fn new(scheme: Box<dyn SignatureScheme>, seed: u64) -> Self {
        Network {
            scheme,
            authorities: BTreeMap::new(),
            eoi: EoiMatrix::new(),
            bus: MessageBus::new(seed),
            next_query: 1,
            anomalies: Vec::new(),
        }
    }

    pub fn scheme(&self) -> &dyn SignatureScheme {
        self.scheme.as_ref()
    }

    pub fn add_authority(&mut self, code: &str, issuer_secret: SecretKey) -> Result<&TaxAuthority, AttributionError> {
        if self.authorities.contains_key(code) {
            return Err(AttributionError::DuplicateJurisdiction(code.into()));
        }
        let auth = TaxAuthority::new(self.scheme.as_ref(), code, issuer_secret);
        Ok(self.authorities.entry(code.into()).or_insert(auth))
    }

    pub fn authority(&self, code: &str) -> Option<&TaxAuthority> {
        self.authorities.get(code)
    }

    pub fn jurisdictions(&self) -> impl Iterator<Item = &str> {
        self.authorities.keys().map(String::as_str)
    }

    pub fn eoi_mut(&mut self) -> &mut EoiMatrix {
        &mut self.eoi
    }

    pub fn bus_mut(&mut self) -> &mut MessageBus {
        &mut self.bus
    }

    pub fn trace(&self) -> &[TraceEntry] {
        self.bus.trace()
    }

    pub fn render_trace(&self) -> String {
        self.bus.render_trace()
    }

    pub fn anomalies(&self) -> &[Anomaly] {
        &self.anomalies
    }

    fn anomaly(&mut self, actor: &str, message: String) {
        self.anomalies.push(Anomaly { tick: self.bus.now(), actor: actor.into(), message });
    }

    pub fn issue_dsc(
        &mut self,
        code: &str,
        tin: &str,
        holder_pubkey: PublicKey,
    ) -> Result<DigitalSignatureCertificate, AttributionError> {
        let scheme = self.scheme.as_ref();
        let auth = self
            .authorities
            .get_mut(code)
            .ok_or_else(|| AttributionError::UnknownJurisdiction(code.into()))?;
        let dsc = auth.issue_dsc(scheme, tin, holder_pubkey)?;
        let digest = short_digest(&DigitalSignatureCertificate::signed_bytes(tin, &dsc.holder_pubkey, code));
        self.bus.record(code, "issue:dsc", digest);
        Ok(dsc)
    }

    /// Registers a proof with `code`, enforcing that an address belongs to at
    /// most one TIN across all authorities.
    pub fn register_ownership(&mut self, code: &str, proof: OwnershipProof) -> Result<(), AttributionError> {
        let digest = short_digest(&serde_json::to_vec(&proof).expect("proof serializes"));
        let address = proof.address.text.clone();
        let clash = self
            .authorities
            .iter()
            .filter_map(|(c, a)| a.registered(&address).map(|p| (c, p)))
            .any(|(c, p)| c != code || p.tin != proof.tin);
        let result = if clash {
            Err(Rejection::Conflict)
        } else {
            let scheme = self.scheme.as_ref();
            self.authorities
                .get_mut(code)
                .ok_or_else(|| AttributionError::UnknownJurisdiction(code.into()))?
                .register_ownership(scheme, proof)
        };
        match result {
            Ok(()) => {
                self.bus.record(code, "register:accepted", digest);
                Ok(())
            }
            Err(reason) => {
                self.bus.record(code, format!("register:rejected:{}", rejection_tag(&reason)), digest);
                Err(AttributionError::Rejected { address, reason })
            }
        }
    }

    /// Broadcasts a signed query for `address` from `origin` to every
    /// authority and waits `deadline_ticks`. Affirmed iff at least one valid
    /// response arrives in time; several affirmations resolve to the lowest
    /// code and are logged as an anomaly.
    pub fn query_beneficiary_jurisdiction(
        &mut self,
        origin: &str,
        credentials: &Credentials,
        address: &str,
        deadline_ticks: u64,
    ) -> Result<QueryOutcome, AttributionError> {
        if !self.authorities.contains_key(origin) {
            return Err(AttributionError::UnknownJurisdiction(origin.into()));
        }
        let query_id = self.next_query;
        self.next_query += 1;
        let start = self.bus.now();
        let deadline = start + deadline_ticks;
        let query = Message::Query {
            query_id,
            asker: origin.into(),
            address: address.into(),
            dsc: credentials.dsc.clone(),
            holder_signature: self
                .scheme
                .sign(&credentials.holder_secret, &query_bytes(query_id, origin, address)),
        };
        let targets: Vec<String> = self.authorities.keys().cloned().collect();
        for to in &targets {
            self.bus.send(origin, to, query.clone());
        }

        let mut affirmed = Vec::new();
        let mut late = Vec::new();
        while self.bus.peek_time().is_some_and(|t| t <= deadline) {
            let env = self.bus.pop_next().expect("peeked");
            self.handle(env, query_id, true, &mut affirmed, &mut late);
        }
        self.bus.advance_to(deadline);
        affirmed.sort();
        affirmed.dedup();
        if affirmed.len() > 1 {
            self.anomaly(origin, format!("query {query_id}: {address} affirmed by {}", affirmed.join(",")));
        }
        let jurisdiction = affirmed.first().cloned();
        let result = if jurisdiction.is_some() { AttributionResult::Affirmed } else { AttributionResult::Unaffirmed };
        let tag = match &jurisdiction {
            Some(j) => format!("result:affirmed:{j}"),
            None => "result:unaffirmed".to_string(),
        };
        self.bus.record(origin, tag, short_digest(&query_bytes(query_id, origin, address)));

        while let Some(env) = self.bus.pop_next() {
            self.handle(env, query_id, false, &mut affirmed, &mut late);
        }
        late.sort();
        late.dedup();
        Ok(QueryOutcome {
            query_id,
            result,
            jurisdiction,
            affirmed_by: affirmed,
            late,
        })
    }

    fn handle(&mut self, env: Envelope, current: u64, in_time: bool, affirmed: &mut Vec<String>, late: &mut Vec<String>) {
        let digest = env.message.digest();
        match env.message {
            Message::Query { query_id, asker, address, dsc, holder_signature } => {
                let me = env.to;
                let scheme = self.scheme.as_ref();
                let credible = asker == env.from
                    && dsc.issuer == asker
                    && self.authorities.get(&asker).is_some_and(|a| dsc.verify(scheme, &a.issuer_pubkey))
                    && scheme.verify(&dsc.holder_pubkey, &query_bytes(query_id, &asker, &address), &holder_signature);
                if !credible {
                    self.bus.record(&me, "reject:query", digest);
                    self.anomaly(&me, format!("query {query_id} from {} failed verification", env.from));
                    return;
                }
                let auth = &self.authorities[&me];
                if auth.registered(&address).is_none() {
                    self.bus.record(&me, "silent:unregistered", digest);
                    return;
                }
                if !self.eoi.allows(&asker, &me) {
                    self.bus.record(&me, "silent:eoi_deny", digest);
                    return;
                }
                if !auth.reverify(scheme, &address) {
                    self.bus.record(&me, "silent:stale_proof", digest);
                    self.anomaly(&me, format!("stored proof for {address} no longer verifies"));
                    return;
                }
                let signature = auth.sign(scheme, &response_bytes(query_id, &me, &address));
                let reply = Message::Response { query_id, responder: me.clone(), address, signature };
                self.bus.send(&me, &asker, reply);
            }
            Message::Response { query_id, responder, address, signature } => {
                let me = env.to;
                if query_id != current {
                    self.bus.record(&me, "stale:response", digest);
                    return;
                }
                if !in_time {
                    self.bus.record(&me, "late:response", digest);
                    late.push(responder);
                    return;
                }
                let valid = responder == env.from
                    && self.authorities.get(&responder).is_some_and(|a| {
                        self.scheme.verify(&a.issuer_pubkey, &response_bytes(query_id, &responder, &address), &signature)
                    });
                if valid {
                    affirmed.push(responder);
                } else {
                    self.bus.record(&me, "reject:response", digest);
                    self.anomaly(&me, format!("response to query {query_id} from {} failed verification", env.from));
                }
            }
        }
    }

    /// Runs the pre-transfer query and prices withholding. The sender's
    /// address must be registered to the credentials' TIN at `req.origin`.
    /// Always emits a `spend` event; affirmed transfers also carry a
    /// travel-rule record.
    pub fn originate_transfer(
        &mut self,
        req: &TransferRequest,
        credentials: &Credentials,
        policy: &JurisdictionPolicy,
    ) -> Result<TransferOutcome, AttributionError> {
        let origin = self
            .authorities
            .get(&req.origin)
            .ok_or_else(|| AttributionError::UnknownJurisdiction(req.origin.clone()))?;
        match origin.registered(&req.from_address) {
            Some(p) if p.tin == credentials.dsc.tin && credentials.dsc.issuer == req.origin => {}
            _ => return Err(AttributionError::UnregisteredOrigin(req.from_address.clone())),
        }
        Address::parse(&req.to_address)?;

        let query = self.query_beneficiary_jurisdiction(&req.origin, credentials, &req.to_address, req.deadline_ticks)?;
        let withholding = withholding_amount(&req.amount, query.result, policy)?;
        let travel_record = match query.result {
            AttributionResult::Affirmed => Some(build_travel_rule_record(
                &req.originator_name,
                &req.from_address,
                req.originator_physical_id.clone(),
                &req.beneficiary_name,
                &req.to_address,
            )?),
            AttributionResult::Unaffirmed => None,
        };
        let mut event = ChainEventRecord::new(req.seq, req.timestamp, EventKind::Spend, &req.asset, req.amount, req.fmv_unit.clone())
            .with_meta(
                "attribution",
                match query.result {
                    AttributionResult::Affirmed => "affirmed",
                    AttributionResult::Unaffirmed => "unaffirmed",
                },
            )
            .with_meta("origin_jurisdiction", req.origin.clone())
            .with_meta("withholding_rate", format_exact(query.result.rate(policy)))
            .with_meta("withholding_units", withholding.base_units().to_string());
        if let Some(j) = &query.jurisdiction {
            event = event.with_meta("beneficiary_jurisdiction", j.clone());
        }
        event.counterparty_address = Some(req.to_address.clone());
        Ok(TransferOutcome { query, withholding, event, travel_record })
    }
}

fn rejection_tag(r: &Rejection) -> &'static str {
    match r {
        Rejection::UnknownTin(_) => "unknown_tin",
        Rejection::AddressKeyMismatch => "address_key_mismatch",
        Rejection::BadWalletSignature => "bad_wallet_signature",
        Rejection::BadDscSignature => "bad_dsc_signature",
        Rejection::Conflict => "conflict",
    }
}
