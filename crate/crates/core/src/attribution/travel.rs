//! Travel-rule records for affirmed transfers.

use serde::{Deserialize, Serialize};

use crate::ledger::{Address, AddressError, AddressKind};

/// One of the accepted forms of originator identification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhysicalId {
    PhysicalAddress { value: String },
    NationalId { value: String },
    CustomerId { value: String },
    BirthDatePlace { date: String, place: String },
}

impl PhysicalId {
    fn is_blank(&self) -> bool {
        match self {
            PhysicalId::PhysicalAddress { value }
            | PhysicalId::NationalId { value }
            | PhysicalId::CustomerId { value } => value.trim().is_empty(),
            PhysicalId::BirthDatePlace { date, place } => date.trim().is_empty() || place.trim().is_empty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TravelRuleRecord {
    pub originator_name: String,
    pub originator_account: Address,
    pub originator_physical_id: PhysicalId,
    pub beneficiary_name: String,
    pub beneficiary_account: Address,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TravelRuleError {
    #[error("travel-rule field {0} is missing")]
    Missing(&'static str),
    #[error("travel-rule field {field} is not a valid account: {source}")]
    InvalidAccount {
        field: &'static str,
        #[source]
        source: AddressError,
    },
    #[error("travel-rule field {field} is a {kind:?}, not an account")]
    NotAnAccount { field: &'static str, kind: AddressKind },
}

fn account(field: &'static str, text: &str) -> Result<Address, TravelRuleError> {
    if text.trim().is_empty() {
        return Err(TravelRuleError::Missing(field));
    }
    let addr = Address::parse(text.trim()).map_err(|source| TravelRuleError::InvalidAccount { field, source })?;
    match addr.kind {
        AddressKind::WifKey | AddressKind::Mnemonic => Err(TravelRuleError::NotAnAccount { field, kind: addr.kind }),
        _ => Ok(addr),
    }
}

fn name(field: &'static str, text: &str) -> Result<String, TravelRuleError> {
    match text.trim() {
        "" => Err(TravelRuleError::Missing(field)),
        t => Ok(t.to_string()),
    }
}

/// Every field is required; accounts must parse as chain addresses.
pub fn build_travel_rule_record(
    originator_name: &str,
    originator_account: &str,
    originator_physical_id: Option<PhysicalId>,
    beneficiary_name: &str,
    beneficiary_account: &str,
) -> Result<TravelRuleRecord, TravelRuleError> {
    let physical = originator_physical_id
        .filter(|p| !p.is_blank())
        .ok_or(TravelRuleError::Missing("originator_physical_id"))?;
    Ok(TravelRuleRecord {
        originator_name: name("originator_name", originator_name)?,
        originator_account: account("originator_account", originator_account)?,
        originator_physical_id: physical,
        beneficiary_name: name("beneficiary_name", beneficiary_name)?,
        beneficiary_account: account("beneficiary_account", beneficiary_account)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: &str = "1BvBMSEYstWetqTFn5Au4m4GFg7xJaNVN2";
    const B: &str = "bc1qar0srrr7xfkvy5l643lydnw9re59gtzzwf5mdq";

    fn id() -> Option<PhysicalId> {
        Some(PhysicalId::NationalId { value: "X-123".into() })
    }

    #[test]
    fn complete_record() {
        let r = build_travel_rule_record("Alice", A, id(), "Bob", B).unwrap();
        assert_eq!(r.originator_account.kind, AddressKind::P2pkh);
        assert_eq!(r.beneficiary_account.kind, AddressKind::Bech32);
    }

    #[test]
    fn missing_components_are_rejected() {
        assert_eq!(build_travel_rule_record(" ", A, id(), "Bob", B), Err(TravelRuleError::Missing("originator_name")));
        assert_eq!(build_travel_rule_record("Alice", A, None, "Bob", B), Err(TravelRuleError::Missing("originator_physical_id")));
        let blank = Some(PhysicalId::BirthDatePlace { date: "1990-01-01".into(), place: "".into() });
        assert!(build_travel_rule_record("Alice", A, blank, "Bob", B).is_err());
        assert_eq!(build_travel_rule_record("Alice", A, id(), "", B), Err(TravelRuleError::Missing("beneficiary_name")));
        assert_eq!(build_travel_rule_record("Alice", A, id(), "Bob", ""), Err(TravelRuleError::Missing("beneficiary_account")));
        assert!(matches!(
            build_travel_rule_record("Alice", "1BvBMSEYstWetqTFn5Au4m4GFg7xJaNVN3", id(), "Bob", B),
            Err(TravelRuleError::InvalidAccount { field: "originator_account", .. })
        ));
    }
}
