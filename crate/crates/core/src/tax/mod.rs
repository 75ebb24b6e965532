//! Cost-basis accounting and tax reports.
//!
//! Events are applied in `seq` order by a [`TaxEngine`]. Acquisitions open
//! [`Lot`]s, disposals consume them under the chosen [`AccountingMethod`],
//! and every tax consequence is written as a [`LedgerLine`]. A
//! [`TaxReport`] sums those lines per tax year.
//!
//! Method notes:
//!
//! - `avg_total` makes two passes over each tax year. The first fixes the
//!   year's average unit basis (opening basis plus acquisitions over opening
//!   quantity plus acquisitions); the second prices every disposal in the
//!   year at it. Remaining lots are re-based to it at year end.
//! - `avg_moving` prices each disposal at the current average basis.
//! - `periodic` re-bases every lot to the last known price when a new tax
//!   year starts. This is a basis-reset simplification of deemed-return
//!   regimes, not a model of them.
//! - `pvct` uses `basis = C × proceeds / portfolio_fmv`, where `C` is the
//!   acquisition cost still pooled across the whole portfolio, and scales
//!   the remaining lots so the pool keeps exactly `C − basis`.

pub mod engine;
pub mod event;
pub mod lots;
pub mod policy;
pub mod report;

pub use engine::{
    compute_report, compute_report_located, withholding_amount, AttributionResult, IngestOutcome, LocatedTaxError, TaxEngine,
};
pub use event::{ChainEventRecord, EventFile, EventKind, EventParseError};
pub use lots::{ConsumedLot, DisposalResult, DisposeContext, Lot, LotStore};
pub use policy::{AccountingMethod, HobbyMinerRule, JurisdictionPolicy, PolicyError, ReceiptTreatment, YearStart};
pub use report::{LedgerLine, TaxReport, Term, YearTotals};

use crate::amount::AmountError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaxError {
    #[error("event seq {got} is not after {prev}")]
    OutOfOrder { prev: u64, got: u64 },
    #[error("insufficient {asset}: need {requested} base units, hold {available}")]
    InsufficientQuantity { asset: String, requested: u128, available: u128 },
    #[error("method {0} is not allowed by the policy")]
    MethodNotAllowed(AccountingMethod),
    #[error("specific identification needs a specid_lot reference")]
    MissingSpecId,
    #[error("no open {asset} lot with id {lot_id}")]
    UnknownLot { asset: String, lot_id: u64 },
    #[error("named {asset} lots are {missing} base units short")]
    SpecIdShort { asset: String, missing: u128 },
    #[error("pvct needs a positive portfolio value")]
    MissingPortfolioFmv,
    #[error("event {seq}: bad metadata {key}={value:?}")]
    BadMetadata { seq: u64, key: String, value: String },
    #[error("event {seq}: {source}")]
    Amount { seq: u64, source: AmountError },
}

impl From<AmountError> for TaxError {
    fn from(source: AmountError) -> Self {
        TaxError::Amount { seq: 0, source }
    }
}
