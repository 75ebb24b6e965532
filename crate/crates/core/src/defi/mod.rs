//! Constant-product pools, LP positions, divergence loss and debt vaults.

pub mod divergence;
pub mod pool;
pub mod vault;

pub use divergence::{divergence_loss, DivergenceError};
pub use pool::{
    fee_tiers, quote_slippage, DepositRecord, Direction, LiquidityPool, LpPosition, PoolError, SwapOutcome,
    Withdrawal, DEFAULT_DEPOSIT_TOLERANCE,
};
pub use vault::{liquidate_vault, vault_accrue_and_check, vault_max_debt, Compounding, Liquidation, PriceQuote, Vault, VaultError};
