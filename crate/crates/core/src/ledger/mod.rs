//! Addresses, UTXO transactions, blocks and proof-of-work.
//!
//! Everything here is a pure function of its inputs. Mutating a
//! [`UtxoSet`](utxo::UtxoSet) is the caller's job and assumes a single writer.

pub mod address;
pub mod block;
pub mod fork;
pub mod hash;
pub mod sig;
pub mod template;
pub mod utxo;

pub use address::{classify_address, derive_address, Address, AddressError, AddressKind, AddressScheme};
pub use block::{compute_merkle_root, mine_nonce, verify_pow, BlockHeader, MineError};
pub use fork::{apply_hard_fork, ForkSpec};
pub use hash::{hash160, sha256, sha256d, Hash32};
pub use sig::{MockScheme, PublicKey, SecretKey, Secp256k1Scheme, Signature, SignatureScheme};
pub use template::{build_block_template, MempoolEntry, DEFAULT_WEIGHT_LIMIT};
pub use utxo::{validate_utxo_tx, OutPoint, TxInput, TxOutput, Utxo, UtxoError, UtxoSet, UtxoTransaction};
