//! Jurisdiction attribution between tax authorities.
//!
//! Each authority issues signature certificates to its taxpayers and keeps a
//! registry of addresses backed by a dual-signed ownership proof: the wallet
//! key signs a challenge and the certified key binds the address to the TIN.
//! Before a transfer the origin authority broadcasts a signed query for the
//! beneficiary address; an authority answers only if it holds a valid proof
//! and its exchange-of-information matrix allows the asker. No answer by the
//! deadline means the transfer is unaffirmed and withholds at the elevated
//! rate.
//!
//! Time is a tick counter and every random choice comes from a seeded
//! generator, so a scenario replays to the same trace.

pub mod authority;
pub mod bus;
pub mod network;
pub mod scenario;
pub mod travel;

pub use authority::{DigitalSignatureCertificate, DuplicateTin, Eoi, EoiMatrix, OwnershipProof, Rejection, TaxAuthority};
pub use bus::{LinkConfig, Message, MessageBus, TraceEntry};
pub use network::{Anomaly, AttributionError, Credentials, Network, QueryOutcome, TransferOutcome, TransferRequest};
pub use scenario::{run_attribution_scenario, AttribRun, AttribScenario, ScenarioError};
pub use travel::{build_travel_rule_record, PhysicalId, TravelRuleError, TravelRuleRecord};
