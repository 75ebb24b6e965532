//! Deterministic crypto-asset tax-event engine.
//!
//! The crate is split by concern:
//!
//! - [`ledger`]: addresses, UTXO validation, block headers, proof-of-work and
//!   hard-fork balance duplication.
//! - [`consensus`]: closed-form PoW/PoS economics and MEV payment accounting.
//! - [`defi`]: constant-product pools, LP positions, divergence loss and
//!   collateralized debt vaults.
//! - [`tax`]: event ingestion, cost-basis lot accounting and reports.
//! - [`attribution`]: a discrete-event simulation of jurisdiction attribution
//!   by dual-signed ownership proofs, plus travel-rule records.
//! - [`sim`]: scenario runners used by the `fisc` binary.
//!
//! Ledger and tax paths never use floating point: quantities are integer base
//! units ([`Amount`]) and prices/bases are exact rationals ([`Rational`]).
//! The closed-form economic formulas are generic over [`scalar::Scalar`] so
//! they can be evaluated exactly or in `f32`/`f64`.

pub mod amount;
pub mod attribution;
pub mod consensus;
pub mod defi;
pub mod diag;
pub mod ledger;
pub mod scalar;
pub mod sim;
pub mod tax;

pub use amount::{Amount, AmountError, SignedAmount};

/// Exact rational used for prices, rates and cost basis.
pub type Rational = num_rational::BigRational;

/// Default floating-point scalar.
pub type Real = f64;

/// Miner expectation evaluated exactly.
pub type MinerExpectationExact = consensus::MinerExpectation<Rational>;

/// Miner expectation evaluated in `f64`.
pub type MinerExpectationF64 = consensus::MinerExpectation<f64>;

/// PoS issuance/return pair evaluated in `f64`.
pub type IssuanceAndReturnF64 = consensus::IssuanceAndReturn<f64>;

/// Engine version stamped into run manifests.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
