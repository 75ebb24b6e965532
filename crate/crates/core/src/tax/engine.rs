//! Event ingestion and report assembly.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::event::{ChainEventRecord, EventKind};
use super::lots::{ConsumedLot, DisposeContext, Lot, LotStore};
use super::policy::{AccountingMethod, HobbyMinerRule, JurisdictionPolicy, ReceiptTreatment};
use super::report::{LedgerLine, TaxReport, Term};
use super::TaxError;
use crate::amount::{Amount, AmountError};
use crate::scalar::parse_rational;
use crate::Rational;

/// Outcome of the pre-transfer jurisdiction query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributionResult {
    Affirmed,
    Unaffirmed,
}

impl AttributionResult {
    pub fn rate<'a>(&self, policy: &'a JurisdictionPolicy) -> &'a Rational {
        match self {
            AttributionResult::Affirmed => &policy.standard_withholding,
            AttributionResult::Unaffirmed => &policy.elevated_withholding,
        }
    }
}

/// `proceeds × rate`, rounded down to a base unit. The elevated rate applies
/// whenever the counterparty's jurisdiction was not affirmed.
pub fn withholding_amount(
    proceeds: &Amount,
    result: AttributionResult,
    policy: &JurisdictionPolicy,
) -> Result<Amount, AmountError> {
    proceeds.mul_floor(result.rate(policy))
}

/// Per-asset flow counters, used to check conservation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssetFlow {
    pub acquired: u128,
    pub disposed: u128,
    pub basis_created: Rational,
    pub basis_consumed: Rational,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestOutcome {
    pub lines: Vec<LedgerLine>,
    pub lots_created: Vec<u64>,
    pub consumed: Vec<ConsumedLot>,
}

/// Basis parked in a liquidity pool while LP moves are not disposals.
#[derive(Debug, Clone, PartialEq, Eq)]
struct PooledBasis {
    basis: Rational,
    acquired_at: i64,
}

#[derive(Debug, Clone)]
pub struct TaxEngine {
    policy: JurisdictionPolicy,
    method: AccountingMethod,
    store: LotStore,
    lines: Vec<LedgerLine>,
    last_seq: Option<u64>,
    current_year: Option<i32>,
    last_price: BTreeMap<String, Rational>,
    year_average: BTreeMap<String, Rational>,
    lp_basis: BTreeMap<(String, String), PooledBasis>,
    flows: BTreeMap<String, AssetFlow>,
}

const SECONDS_PER_DAY: i64 = 86_400;

impl TaxEngine {
    pub fn new(policy: JurisdictionPolicy, method: AccountingMethod) -> Result<Self, TaxError> {
        if !policy.allowed_methods.contains(&method) {
            return Err(TaxError::MethodNotAllowed(method));
        }
        Ok(TaxEngine {
            policy,
            method,
            store: LotStore::new(),
            lines: Vec::new(),
            last_seq: None,
            current_year: None,
            last_price: BTreeMap::new(),
            year_average: BTreeMap::new(),
            lp_basis: BTreeMap::new(),
            flows: BTreeMap::new(),
        })
    }

    pub fn policy(&self) -> &JurisdictionPolicy {
        &self.policy
    }

    pub fn method(&self) -> AccountingMethod {
        self.method
    }

    pub fn store(&self) -> &LotStore {
        &self.store
    }

    pub fn lines(&self) -> &[LedgerLine] {
        &self.lines
    }

    pub fn flow(&self, asset: &str) -> AssetFlow {
        self.flows.get(asset).cloned().unwrap_or_default()
    }

    /// Basis parked in pools while LP moves are not disposals.
    pub fn pooled_basis(&self) -> Rational {
        self.lp_basis.values().map(|p| p.basis.clone()).sum()
    }

    /// Fixes the per-asset average basis used by `avg_total` for the
    /// current tax year.
    pub fn set_year_averages(&mut self, averages: BTreeMap<String, Rational>) {
        self.year_average = averages;
    }

    fn flow_mut(&mut self, asset: &str) -> &mut AssetFlow {
        self.flows.entry(asset.into()).or_default()
    }

    /// Applies year-end and year-start adjustments when `year` begins.
    pub fn roll_to_year(&mut self, year: i32) {
        match self.current_year {
            Some(current) if year > current => {
                if self.method == AccountingMethod::AvgTotal {
                    self.close_year();
                }
                if self.method == AccountingMethod::Periodic {
                    let prices: Vec<(String, Rational)> = self
                        .store
                        .assets()
                        .filter_map(|a| self.last_price.get(a).map(|p| (a.to_string(), p.clone())))
                        .collect();
                    for (asset, price) in prices {
                        self.store.rebase(&asset, &price);
                    }
                }
                self.current_year = Some(year);
            }
            None => self.current_year = Some(year),
            _ => {}
        }
    }

    fn close_year(&mut self) {
        for (asset, avg) in std::mem::take(&mut self.year_average) {
            self.store.rebase(&asset, &avg);
        }
    }

    /// Ends processing and assembles the report.
    pub fn finish(mut self) -> TaxReport {
        if self.method == AccountingMethod::AvgTotal {
            self.close_year();
        }
        let holdings = self.store.iter().cloned().collect();
        TaxReport::from_lines(self.method, self.lines, holdings)
    }

    fn line(&self, e: &ChainEventRecord, qty: Amount, proceeds: Rational, basis: Rational, gain: Rational, term: Term) -> LedgerLine {
        LedgerLine {
            seq: e.seq,
            timestamp: e.timestamp,
            tax_year: self.policy.tax_year_start.tax_year(e.timestamp),
            kind: e.kind,
            asset: e.asset.clone(),
            qty,
            proceeds,
            basis,
            gain,
            term,
        }
    }

    fn meta_rational(e: &ChainEventRecord, key: &str) -> Result<Option<Rational>, TaxError> {
        match e.metadata.get(key) {
            None => Ok(None),
            Some(v) => parse_rational(v)
                .ok()
                .filter(|r| !r.is_negative())
                .map(Some)
                .ok_or_else(|| TaxError::BadMetadata { seq: e.seq, key: key.into(), value: v.clone() }),
        }
    }

    fn open_lot(&mut self, e: &ChainEventRecord, unit_basis: Rational, acquired_at: i64, out: &mut IngestOutcome) {
        let created = e.quantity.to_rational() * &unit_basis;
        let flow = self.flow_mut(&e.asset);
        flow.acquired += e.quantity.base_units();
        flow.basis_created += created;
        self.store.add(Lot {
            lot_id: e.seq,
            asset: e.asset.clone(),
            remaining_qty: e.quantity,
            unit_basis,
            acquired_at,
            source: e.kind,
        });
        out.lots_created.push(e.seq);
    }

    fn income(&mut self, e: &ChainEventRecord, out: &mut IngestOutcome) {
        let fmv = e.fmv_total();
        out.lines.push(self.line(e, e.quantity, fmv.clone(), Rational::zero(), fmv, Term::Income));
        self.open_lot(e, e.fmv_unit.clone(), e.timestamp, out);
    }

    fn receipt(&mut self, e: &ChainEventRecord, treatment: ReceiptTreatment, out: &mut IngestOutcome) {
        match treatment {
            ReceiptTreatment::FmvIncome => self.income(e, out),
            ReceiptTreatment::ZeroBasis => self.open_lot(e, Rational::zero(), e.timestamp, out),
        }
    }

    fn portfolio_fmv(&self, e: &ChainEventRecord) -> Result<Rational, TaxError> {
        if let Some(v) = Self::meta_rational(e, "portfolio_fmv")? {
            return Ok(v);
        }
        Ok(self
            .store
            .iter()
            .map(|lot| {
                let price = self.last_price.get(&lot.asset).cloned().unwrap_or_default();
                lot.remaining_qty.to_rational() * price
            })
            .sum())
    }

    /// Consumes lots for `e` and returns the basis removed.
    fn consume(&mut self, e: &ChainEventRecord, unit_proceeds: &Rational, out: &mut IngestOutcome) -> Result<Vec<ConsumedLot>, TaxError> {
        let ctx = DisposeContext {
            specid: e.specid_lot.clone(),
            portfolio_fmv: if self.method == AccountingMethod::Pvct { Some(self.portfolio_fmv(e)?) } else { None },
            average_basis: self.year_average.get(&e.asset).cloned(),
        };
        let result = self.store.dispose(&e.asset, &e.quantity, unit_proceeds, self.method, &ctx).map_err(|err| match err {
            TaxError::Amount { source, .. } => TaxError::Amount { seq: e.seq, source },
            other => other,
        })?;
        let flow = self.flow_mut(&e.asset);
        flow.disposed += e.quantity.base_units();
        flow.basis_consumed += &result.basis;
        out.consumed.extend(result.consumed.iter().cloned());
        Ok(result.consumed)
    }

    fn is_long(&self, disposed_at: i64, acquired_at: i64) -> bool {
        disposed_at - acquired_at > self.policy.long_term_days as i64 * SECONDS_PER_DAY
    }

    fn disposal(&mut self, e: &ChainEventRecord, exempt: bool, out: &mut IngestOutcome) -> Result<(), TaxError> {
        let consumed = self.consume(e, &e.fmv_unit, out)?;
        let mut groups: BTreeMap<Term, (u128, Rational)> = BTreeMap::new();
        for c in &consumed {
            let term = if exempt {
                Term::Exempt
            } else if self.is_long(e.timestamp, c.acquired_at) {
                Term::Long
            } else {
                Term::Short
            };
            let g = groups.entry(term).or_insert((0, Rational::zero()));
            g.0 += c.qty.base_units();
            g.1 += &c.basis;
        }
        for (term, (units, basis)) in groups {
            let qty = Amount::new(units, e.quantity.decimals());
            let proceeds = qty.to_rational() * &e.fmv_unit;
            let gain = &proceeds - &basis;
            out.lines.push(self.line(e, qty, proceeds, basis, gain, term));
        }
        if let Some(tag) = e.metadata.get("attribution") {
            let result = match tag.as_str() {
                "affirmed" => AttributionResult::Affirmed,
                "unaffirmed" => AttributionResult::Unaffirmed,
                _ => return Err(TaxError::BadMetadata { seq: e.seq, key: "attribution".into(), value: tag.clone() }),
            };
            let proceeds = e.fmv_total();
            let owed = &proceeds * result.rate(&self.policy);
            out.lines.push(self.line(e, e.quantity, proceeds, Rational::zero(), owed, Term::Withholding));
        }
        Ok(())
    }

    fn forfeiture(&mut self, e: &ChainEventRecord, out: &mut IngestOutcome) -> Result<(), TaxError> {
        let consumed = self.consume(e, &Rational::zero(), out)?;
        let basis: Rational = consumed.iter().map(|c| c.basis.clone()).sum();
        let term = if self.policy.slashing_deductible { Term::Deduction } else { Term::NonDeductible };
        out.lines.push(self.line(e, e.quantity, Rational::zero(), basis.clone(), basis, term));
        Ok(())
    }

    fn pool_key(e: &ChainEventRecord) -> (String, String) {
        let pool = e.metadata.get("pool").cloned().unwrap_or_default();
        (pool, e.asset.clone())
    }

    fn lp_deposit(&mut self, e: &ChainEventRecord, out: &mut IngestOutcome) -> Result<(), TaxError> {
        let consumed = self.consume(e, &Rational::zero(), out)?;
        let basis: Rational = consumed.iter().map(|c| c.basis.clone()).sum();
        let earliest = consumed.iter().map(|c| c.acquired_at).min().unwrap_or(e.timestamp);
        let entry = self
            .lp_basis
            .entry(Self::pool_key(e))
            .or_insert(PooledBasis { basis: Rational::zero(), acquired_at: earliest });
        entry.basis += basis;
        entry.acquired_at = entry.acquired_at.min(earliest);
        Ok(())
    }

    fn lp_withdrawal(&mut self, e: &ChainEventRecord, out: &mut IngestOutcome) -> Result<(), TaxError> {
        let fraction = Self::meta_rational(e, "lp_fraction")?.unwrap_or_else(|| Rational::from_integer(BigInt::from(1)));
        if fraction > Rational::from_integer(BigInt::from(1)) {
            return Err(TaxError::BadMetadata {
                seq: e.seq,
                key: "lp_fraction".into(),
                value: e.metadata["lp_fraction"].clone(),
            });
        }
        let (drawn, acquired_at) = match self.lp_basis.get_mut(&Self::pool_key(e)) {
            Some(p) => {
                let drawn = &p.basis * &fraction;
                p.basis -= &drawn;
                (drawn, p.acquired_at)
            }
            None => (Rational::zero(), e.timestamp),
        };
        let unit = drawn / e.quantity.to_rational();
        self.open_lot(e, unit, acquired_at, out);
        Ok(())
    }

    fn expense(&mut self, e: &ChainEventRecord, deductible: bool, out: &mut IngestOutcome) -> Result<(), TaxError> {
        if let Some(cost) = Self::meta_rational(e, "expense")? {
            let term = if deductible { Term::Deduction } else { Term::NonDeductible };
            out.lines.push(self.line(e, Amount::zero(e.quantity.decimals()), Rational::zero(), Rational::zero(), cost, term));
        }
        Ok(())
    }

    /// Applies one event. Events must arrive in strictly increasing `seq`.
    pub fn ingest_event(&mut self, e: &ChainEventRecord) -> Result<IngestOutcome, TaxError> {
        if let Some(prev) = self.last_seq {
            if e.seq <= prev {
                return Err(TaxError::OutOfOrder { prev, got: e.seq });
            }
        }
        self.last_seq = Some(e.seq);
        self.roll_to_year(self.policy.tax_year_start.tax_year(e.timestamp));
        let mut out = IngestOutcome::default();
        if e.kind == EventKind::SelfTransfer {
            return Ok(out);
        }
        if e.quantity.base_units() > 0 {
            self.last_price.insert(e.asset.clone(), e.fmv_unit.clone());
        }
        let mut expense_deductible = true;
        if e.quantity.base_units() > 0 {
            match e.kind {
                EventKind::Purchase | EventKind::IcoAllocation => self.open_lot(e, e.fmv_unit.clone(), e.timestamp, &mut out),
                EventKind::MiningReward | EventKind::PoolPayout => match self.policy.hobby_rule() {
                    HobbyMinerRule::None => self.income(e, &mut out),
                    HobbyMinerRule::ExemptWithCostBasis => {
                        let cost = Self::meta_rational(e, "expense")?.unwrap_or_default();
                        let unit = cost / e.quantity.to_rational();
                        self.open_lot(e, unit, e.timestamp, &mut out);
                        return Ok(self.commit(out));
                    }
                    HobbyMinerRule::ZeroBasisNoDeduction => {
                        self.open_lot(e, Rational::zero(), e.timestamp, &mut out);
                        expense_deductible = false;
                    }
                },
                EventKind::StakingReward | EventKind::MevPayout | EventKind::NftRoyalty => self.income(e, &mut out),
                EventKind::Airdrop => self.receipt(e, self.policy.airdrop_treatment, &mut out),
                EventKind::ForkReceipt => self.receipt(e, self.policy.fork_treatment, &mut out),
                EventKind::LpDeposit if self.policy.lp_is_disposal => self.disposal(e, false, &mut out)?,
                EventKind::LpDeposit => self.lp_deposit(e, &mut out)?,
                EventKind::LpWithdrawal if self.policy.lp_is_disposal => {
                    self.open_lot(e, e.fmv_unit.clone(), e.timestamp, &mut out)
                }
                EventKind::LpWithdrawal => self.lp_withdrawal(e, &mut out)?,
                EventKind::Sale | EventKind::Swap | EventKind::VaultLiquidation => self.disposal(e, false, &mut out)?,
                EventKind::Gift => self.disposal(e, self.policy.gift_exempt, &mut out)?,
                EventKind::Spend => match e.metadata.get("reason").map(String::as_str) {
                    Some("slashing") | Some("penalty") => self.forfeiture(e, &mut out)?,
                    _ => self.disposal(e, false, &mut out)?,
                },
                EventKind::SelfTransfer => unreachable!("handled above"),
            }
        }
        self.expense(e, expense_deductible, &mut out)?;
        Ok(self.commit(out))
    }

    fn commit(&mut self, out: IngestOutcome) -> IngestOutcome {
        self.lines.extend(out.lines.iter().cloned());
        out
    }
}

/// Runs `events` through a fresh engine. `avg_total` gets its per-year
/// averages from a first pass over each year.
pub fn compute_report(
    events: &[ChainEventRecord],
    policy: &JurisdictionPolicy,
    method: AccountingMethod,
) -> Result<TaxReport, TaxError> {
    compute_report_located(events, policy, method).map_err(|e| e.error)
}

/// A report failure and the `seq` of the event being applied, if any.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{error}")]
pub struct LocatedTaxError {
    pub seq: Option<u64>,
    #[source]
    pub error: TaxError,
}

/// [`compute_report`], also naming the event that failed.
pub fn compute_report_located(
    events: &[ChainEventRecord],
    policy: &JurisdictionPolicy,
    method: AccountingMethod,
) -> Result<TaxReport, LocatedTaxError> {
    let mut current = None;
    let at = |seq: Option<u64>| move |error| LocatedTaxError { seq, error };
    let mut engine = TaxEngine::new(policy.clone(), method).map_err(at(None))?;
    if method != AccountingMethod::AvgTotal {
        for e in events {
            engine.ingest_event(e).map_err(at(Some(e.seq)))?;
        }
        return Ok(engine.finish());
    }
    let year_of = |e: &ChainEventRecord| policy.tax_year_start.tax_year(e.timestamp);
    let mut start = 0;
    while start < events.len() {
        let year = year_of(&events[start]);
        let end = events[start..]
            .iter()
            .position(|e| year_of(e) > year)
            .map_or(events.len(), |off| start + off);
        engine.roll_to_year(year);
        let averages = year_averages(&engine, &events[start..end], &mut current).map_err(|e| at(current)(e))?;
        engine.set_year_averages(averages);
        for e in &events[start..end] {
            engine.ingest_event(e).map_err(at(Some(e.seq)))?;
        }
        start = end;
    }
    Ok(engine.finish())
}

fn year_averages(
    engine: &TaxEngine,
    events: &[ChainEventRecord],
    current: &mut Option<u64>,
) -> Result<BTreeMap<String, Rational>, TaxError> {
    let mut probe = engine.clone();
    probe.method = AccountingMethod::Fifo;
    probe.year_average.clear();
    for e in events {
        *current = Some(e.seq);
        probe.ingest_event(e)?;
    }
    let mut averages = BTreeMap::new();
    for (asset, after) in &probe.flows {
        let before = engine.flow(asset);
        let decimals = probe
            .store
            .lots(asset)
            .first()
            .map(|l| l.remaining_qty.decimals())
            .or_else(|| events.iter().find(|e| &e.asset == asset).map(|e| e.quantity.decimals()))
            .unwrap_or(0);
        let opening_units: u128 = engine.store.remaining(asset);
        let units = opening_units + (after.acquired - before.acquired);
        if units == 0 {
            continue;
        }
        let basis = engine.store.asset_basis(asset) + (&after.basis_created - &before.basis_created);
        averages.insert(asset.clone(), basis / Amount::new(units, decimals).to_rational());
    }
    Ok(averages)
}
