//! Jurisdiction policy switches and accounting methods.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccountingMethod {
    Fifo,
    Lifo,
    Hifo,
    #[serde(rename = "specid")]
    SpecId,
    AvgTotal,
    AvgMoving,
    Periodic,
    Pvct,
}

impl AccountingMethod {
    pub const ALL: [AccountingMethod; 8] = [
        AccountingMethod::Fifo,
        AccountingMethod::Lifo,
        AccountingMethod::Hifo,
        AccountingMethod::SpecId,
        AccountingMethod::AvgTotal,
        AccountingMethod::AvgMoving,
        AccountingMethod::Periodic,
        AccountingMethod::Pvct,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AccountingMethod::Fifo => "fifo",
            AccountingMethod::Lifo => "lifo",
            AccountingMethod::Hifo => "hifo",
            AccountingMethod::SpecId => "specid",
            AccountingMethod::AvgTotal => "avg_total",
            AccountingMethod::AvgMoving => "avg_moving",
            AccountingMethod::Periodic => "periodic",
            AccountingMethod::Pvct => "pvct",
        }
    }
}

impl fmt::Display for AccountingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown accounting method {0:?}")]
pub struct UnknownMethod(pub String);

impl FromStr for AccountingMethod {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        let alias = match norm.as_str() {
            "spec_id" => "specid",
            "avgtotal" => "avg_total",
            "avgmoving" => "avg_moving",
            other => other,
        };
        AccountingMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == alias)
            .ok_or_else(|| UnknownMethod(s.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiptTreatment {
    /// Income at fair market value; the lot takes that value as basis.
    FmvIncome,
    /// No income; the lot starts at zero basis.
    ZeroBasis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HobbyMinerRule {
    /// No special treatment: mining income at FMV.
    None,
    /// No income; mining expenses become the basis.
    ExemptWithCostBasis,
    /// No income, zero basis, expenses not deductible.
    ZeroBasisNoDeduction,
}

/// Month and day the tax year starts on, written `"MM-DD"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct YearStart {
    pub month: u32,
    pub day: u32,
}

impl Default for YearStart {
    fn default() -> Self {
        YearStart { month: 1, day: 1 }
    }
}

impl YearStart {
    pub fn parse(text: &str) -> Option<YearStart> {
        let (m, d) = text.trim().split_once('-')?;
        let ys = YearStart { month: m.parse().ok()?, day: d.parse().ok()? };
        // Validate against a leap year so 02-29 is accepted.
        NaiveDate::from_ymd_opt(2000, ys.month, ys.day)?;
        Some(ys)
    }

    /// Label of the tax year containing `timestamp`: the calendar year in
    /// which that tax year began.
    pub fn tax_year(&self, timestamp: i64) -> i32 {
        let date = chrono::DateTime::from_timestamp(timestamp, 0).expect("timestamp in range").date_naive();
        if (date.month(), date.day()) >= (self.month, self.day) {
            date.year()
        } else {
            date.year() - 1
        }
    }
}

impl Serialize for YearStart {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{:02}-{:02}", self.month, self.day))
    }
}

impl<'de> Deserialize<'de> for YearStart {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        YearStart::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("invalid tax_year_start {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JurisdictionPolicy {
    pub fork_treatment: ReceiptTreatment,
    pub airdrop_treatment: ReceiptTreatment,
    pub hobby_miner: HobbyMinerRule,
    pub mining_is_business: bool,
    pub allowed_methods: BTreeSet<AccountingMethod>,
    #[serde(with = "crate::scalar::serde_rational")]
    pub standard_withholding: Rational,
    #[serde(with = "crate::scalar::serde_rational")]
    pub elevated_withholding: Rational,
    pub tax_year_start: YearStart,
    pub slashing_deductible: bool,
    /// Held strictly longer than this many days counts as long-term.
    pub long_term_days: u32,
    pub gift_exempt: bool,
    /// Treat LP deposits and withdrawals as disposals and acquisitions.
    pub lp_is_disposal: bool,
}

impl Default for JurisdictionPolicy {
    fn default() -> Self {
        JurisdictionPolicy {
            fork_treatment: ReceiptTreatment::ZeroBasis,
            airdrop_treatment: ReceiptTreatment::FmvIncome,
            hobby_miner: HobbyMinerRule::None,
            mining_is_business: false,
            allowed_methods: AccountingMethod::ALL.into_iter().collect(),
            standard_withholding: Rational::new(BigInt::from(1), BigInt::from(10)),
            elevated_withholding: Rational::new(BigInt::from(3), BigInt::from(10)),
            tax_year_start: YearStart::default(),
            slashing_deductible: false,
            long_term_days: 365,
            gift_exempt: false,
            lp_is_disposal: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(crate::diag::TomlDiag),
    #[error("allowed_methods must not be empty")]
    NoMethods,
    #[error("withholding rates must lie in [0, 1] with elevated >= standard")]
    Withholding,
}

impl JurisdictionPolicy {
    pub fn from_toml_str(text: &str) -> Result<Self, PolicyError> {
        let p: JurisdictionPolicy = toml::from_str(text).map_err(|e| PolicyError::Parse(crate::diag::TomlDiag::new(text, &e)))?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| PolicyError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.allowed_methods.is_empty() {
            return Err(PolicyError::NoMethods);
        }
        let zero = Rational::from_integer(BigInt::from(0));
        let one = Rational::from_integer(BigInt::from(1));
        let in_range = |r: &Rational| *r >= zero && *r <= one;
        if !in_range(&self.standard_withholding)
            || !in_range(&self.elevated_withholding)
            || self.elevated_withholding < self.standard_withholding
        {
            return Err(PolicyError::Withholding);
        }
        Ok(())
    }

    /// Whether mining income falls under a hobby exemption.
    pub fn hobby_rule(&self) -> HobbyMinerRule {
        if self.mining_is_business {
            HobbyMinerRule::None
        } else {
            self.hobby_miner
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_policy() {
        let text = r#"
fork_treatment = "fmv_income"
airdrop_treatment = "zero_basis"
hobby_miner = "exempt_with_cost_basis"
mining_is_business = false
allowed_methods = ["fifo", "hifo", "specid"]
standard_withholding = "0.1"
elevated_withholding = 0.3
tax_year_start = "04-06"
slashing_deductible = true
long_term_days = 365
gift_exempt = true
lp_is_disposal = true
"#;
        let p = JurisdictionPolicy::from_toml_str(text).unwrap();
        assert_eq!(p.fork_treatment, ReceiptTreatment::FmvIncome);
        assert_eq!(p.allowed_methods.len(), 3);
        assert_eq!(p.tax_year_start, YearStart { month: 4, day: 6 });
        assert_eq!(p.hobby_rule(), HobbyMinerRule::ExemptWithCostBasis);
    }

    #[test]
    fn rejects_bad_policies() {
        assert!(JurisdictionPolicy::from_toml_str("allowed_methods = []").is_err());
        assert!(JurisdictionPolicy::from_toml_str("elevated_withholding = 0.05").is_err());
        assert!(JurisdictionPolicy::from_toml_str("tax_year_start = \"13-01\"").is_err());
        assert!(JurisdictionPolicy::from_toml_str("unknown_switch = true").is_err());
    }

    #[test]
    fn tax_year_labels() {
        let uk = YearStart { month: 4, day: 6 };
        // 2021-04-05 and 2021-04-06, midday UTC
        assert_eq!(uk.tax_year(1_617_624_000), 2020);
        assert_eq!(uk.tax_year(1_617_710_400), 2021);
        assert_eq!(YearStart::default().tax_year(0), 1970);
    }

    #[test]
    fn method_names() {
        for m in AccountingMethod::ALL {
            assert_eq!(m.as_str().parse::<AccountingMethod>().unwrap(), m);
        }
        assert_eq!("SPEC-ID".parse::<AccountingMethod>().unwrap(), AccountingMethod::SpecId);
        assert!("lottery".parse::<AccountingMethod>().is_err());
    }
}
