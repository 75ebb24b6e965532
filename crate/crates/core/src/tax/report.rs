//! Ledger lines, per-year totals and their CSV/JSON renderings.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use super::event::EventKind;
use super::lots::Lot;
use super::policy::AccountingMethod;
use crate::amount::Amount;
use crate::scalar::format_decimal;
use crate::Rational;

/// Decimal places used when rendering money.
pub const MONEY_SCALE: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Short,
    Long,
    Income,
    Deduction,
    NonDeductible,
    Exempt,
    Withholding,
}

impl Term {
    pub fn as_str(&self) -> &'static str {
        match self {
            Term::Short => "short",
            Term::Long => "long",
            Term::Income => "income",
            Term::Deduction => "deduction",
            Term::NonDeductible => "non_deductible",
            Term::Exempt => "exempt",
            Term::Withholding => "withholding",
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One tax consequence. `gain` is what the line adds to its term's bucket:
/// realized gain for short/long/exempt, income, deductible amount or
/// withholding owed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerLine {
    pub seq: u64,
    pub timestamp: i64,
    pub tax_year: i32,
    pub kind: EventKind,
    pub asset: String,
    pub qty: Amount,
    pub proceeds: Rational,
    pub basis: Rational,
    pub gain: Rational,
    pub term: Term,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct YearTotals {
    pub ordinary_income: Rational,
    pub short_term_gain: Rational,
    pub long_term_gain: Rational,
    pub deductible_expenses: Rational,
    pub non_deductible_losses: Rational,
    pub exempt_gain: Rational,
    pub withholding_owed: Rational,
}

impl YearTotals {
    pub fn add(&mut self, line: &LedgerLine) {
        let bucket = match line.term {
            Term::Short => &mut self.short_term_gain,
            Term::Long => &mut self.long_term_gain,
            Term::Income => &mut self.ordinary_income,
            Term::Deduction => &mut self.deductible_expenses,
            Term::NonDeductible => &mut self.non_deductible_losses,
            Term::Exempt => &mut self.exempt_gain,
            Term::Withholding => &mut self.withholding_owed,
        };
        *bucket += &line.gain;
    }

    /// Short plus long-term gain.
    pub fn capital_gain(&self) -> Rational {
        &self.short_term_gain + &self.long_term_gain
    }

    pub fn is_zero(&self) -> bool {
        [
            &self.ordinary_income,
            &self.short_term_gain,
            &self.long_term_gain,
            &self.deductible_expenses,
            &self.non_deductible_losses,
            &self.exempt_gain,
            &self.withholding_owed,
        ]
        .iter()
        .all(|v| v.is_zero())
    }

    fn rendered(&self) -> BTreeMap<&'static str, String> {
        let f = |v: &Rational| format_decimal(v, MONEY_SCALE);
        BTreeMap::from([
            ("ordinary_income", f(&self.ordinary_income)),
            ("short_term_gain", f(&self.short_term_gain)),
            ("long_term_gain", f(&self.long_term_gain)),
            ("capital_gain", f(&self.capital_gain())),
            ("deductible_expenses", f(&self.deductible_expenses)),
            ("non_deductible_losses", f(&self.non_deductible_losses)),
            ("exempt_gain", f(&self.exempt_gain)),
            ("withholding_owed", f(&self.withholding_owed)),
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxReport {
    pub method: AccountingMethod,
    pub lines: Vec<LedgerLine>,
    pub years: BTreeMap<i32, YearTotals>,
    /// Lots still open after the last event.
    pub holdings: Vec<Lot>,
}

#[derive(Serialize)]
struct HoldingJson {
    asset: String,
    qty: String,
    basis: String,
}

#[derive(Serialize)]
struct TotalsJson {
    method: String,
    years: BTreeMap<String, BTreeMap<&'static str, String>>,
    overall: BTreeMap<&'static str, String>,
    holdings: Vec<HoldingJson>,
}

impl TaxReport {
    pub fn from_lines(method: AccountingMethod, lines: Vec<LedgerLine>, holdings: Vec<Lot>) -> Self {
        let mut years: BTreeMap<i32, YearTotals> = BTreeMap::new();
        for line in &lines {
            years.entry(line.tax_year).or_default().add(line);
        }
        TaxReport { method, lines, years, holdings }
    }

    /// Totals over every year.
    pub fn overall(&self) -> YearTotals {
        let mut t = YearTotals::default();
        for line in &self.lines {
            t.add(line);
        }
        t
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["seq", "date", "kind", "asset", "qty", "proceeds", "basis", "gain", "term"])
            .expect("in-memory write");
        for l in &self.lines {
            let date = chrono::DateTime::from_timestamp(l.timestamp, 0)
                .map(|d| d.format("%Y-%m-%d").to_string())
                .unwrap_or_default();
            w.write_record([
                l.seq.to_string(),
                date,
                l.kind.to_string(),
                l.asset.clone(),
                l.qty.to_string(),
                format_decimal(&l.proceeds, MONEY_SCALE),
                format_decimal(&l.basis, MONEY_SCALE),
                format_decimal(&l.gain, MONEY_SCALE),
                l.term.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn totals_json(&self) -> String {
        let mut holdings: BTreeMap<&str, (u128, u8, Rational)> = BTreeMap::new();
        for lot in &self.holdings {
            let e = holdings
                .entry(&lot.asset)
                .or_insert((0, lot.remaining_qty.decimals(), Rational::zero()));
            e.0 += lot.remaining_qty.base_units();
            e.2 += lot.total_basis();
        }
        let json = TotalsJson {
            method: self.method.to_string(),
            years: self.years.iter().map(|(y, t)| (y.to_string(), t.rendered())).collect(),
            overall: self.overall().rendered(),
            holdings: holdings
                .into_iter()
                .map(|(asset, (units, decimals, basis))| HoldingJson {
                    asset: asset.into(),
                    qty: Amount::new(units, decimals).to_string(),
                    basis: format_decimal(&basis, MONEY_SCALE),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&json).expect("totals serialize");
        s.push('\n');
        s
    }
}
