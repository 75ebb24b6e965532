//! UTXO transactions and spend validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::address::Address;
use super::hash::{sha256d, Hash32};
use super::sig::{PublicKey, SecretKey, Signature, SignatureScheme};
use crate::amount::{Amount, AmountError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OutPoint {
    pub txid: Hash32,
    pub index: u32,
}

impl fmt::Display for OutPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.txid, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utxo {
    pub outpoint: OutPoint,
    pub owner: Address,
    pub value: Amount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxInput {
    pub outpoint: OutPoint,
    pub signer: PublicKey,
    pub signature: Signature,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxOutput {
    pub address: Address,
    pub value: Amount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtxoTransaction {
    pub inputs: Vec<TxInput>,
    pub outputs: Vec<TxOutput>,
    pub weight_units: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UtxoError {
    #[error("unknown outpoint {0}")]
    UnknownOutpoint(OutPoint),
    #[error("signer key does not control the address owning {0}")]
    OwnerMismatch(OutPoint),
    #[error("invalid signature for input {0}")]
    BadSignature(OutPoint),
    #[error("outputs ({outputs}) exceed inputs ({inputs})")]
    Overspend { inputs: Amount, outputs: Amount },
    #[error("outpoint {0} spent twice in one transaction")]
    DuplicateInput(OutPoint),
    #[error("outpoint {0} already present in the set")]
    DuplicateOutpoint(OutPoint),
    #[error("transaction has no inputs")]
    NoInputs,
    #[error("transaction has no outputs")]
    NoOutputs,
    #[error("output {0} carries zero value")]
    ZeroValueOutput(usize),
    #[error(transparent)]
    Amount(#[from] AmountError),
}

impl UtxoTransaction {
    /// Builds a transaction and signs each input with the matching secret.
    pub fn signed(
        scheme: &dyn SignatureScheme,
        spends: &[(OutPoint, &SecretKey)],
        outputs: Vec<TxOutput>,
        weight_units: u64,
    ) -> UtxoTransaction {
        let mut tx = UtxoTransaction {
            inputs: spends
                .iter()
                .map(|(op, sk)| TxInput { outpoint: *op, signer: scheme.public_key(sk), signature: Signature(Vec::new()) })
                .collect(),
            outputs,
            weight_units,
        };
        let digest = tx.sighash();
        for (input, (_, sk)) in tx.inputs.iter_mut().zip(spends) {
            input.signature = scheme.sign(sk, &digest.0);
        }
        tx
    }

    fn unsigned_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(&(self.inputs.len() as u32).to_le_bytes());
        for i in &self.inputs {
            buf.extend_from_slice(&i.outpoint.txid.0);
            buf.extend_from_slice(&i.outpoint.index.to_le_bytes());
            buf.extend_from_slice(&(i.signer.0.len() as u32).to_le_bytes());
            buf.extend_from_slice(&i.signer.0);
        }
        buf.extend_from_slice(&(self.outputs.len() as u32).to_le_bytes());
        for o in &self.outputs {
            buf.extend_from_slice(&(o.address.text.len() as u32).to_le_bytes());
            buf.extend_from_slice(o.address.text.as_bytes());
            buf.extend_from_slice(&o.value.base_units().to_le_bytes());
            buf.push(o.value.decimals());
        }
        buf.extend_from_slice(&self.weight_units.to_le_bytes());
        buf
    }

    /// Digest every input signs.
    pub fn sighash(&self) -> Hash32 {
        sha256d(&self.unsigned_bytes())
    }

    pub fn txid(&self) -> Hash32 {
        let mut buf = self.unsigned_bytes();
        for i in &self.inputs {
            buf.extend_from_slice(&(i.signature.0.len() as u32).to_le_bytes());
            buf.extend_from_slice(&i.signature.0);
        }
        sha256d(&buf)
    }
}

/// Unspent outputs keyed by outpoint.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UtxoSet {
    entries: BTreeMap<OutPoint, Utxo>,
}

impl UtxoSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, utxo: Utxo) -> Result<(), UtxoError> {
        if self.entries.contains_key(&utxo.outpoint) {
            return Err(UtxoError::DuplicateOutpoint(utxo.outpoint));
        }
        self.entries.insert(utxo.outpoint, utxo);
        Ok(())
    }

    pub fn get(&self, outpoint: &OutPoint) -> Option<&Utxo> {
        self.entries.get(outpoint)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Utxo> {
        self.entries.values()
    }

    /// Validates `tx`, then removes its inputs and adds its outputs.
    /// Returns the fee.
    pub fn apply(&mut self, tx: &UtxoTransaction, scheme: &dyn SignatureScheme) -> Result<Amount, UtxoError> {
        let fee = validate_utxo_tx(tx, self, scheme)?;
        let txid = tx.txid();
        for input in &tx.inputs {
            self.entries.remove(&input.outpoint);
        }
        for (index, out) in tx.outputs.iter().enumerate() {
            let outpoint = OutPoint { txid, index: index as u32 };
            self.insert(Utxo { outpoint, owner: out.address.clone(), value: out.value })?;
        }
        Ok(fee)
    }
}

/// Checks a spend against the set and returns `fee = Σ inputs − Σ outputs`.
pub fn validate_utxo_tx(
    tx: &UtxoTransaction,
    utxo_set: &UtxoSet,
    scheme: &dyn SignatureScheme,
) -> Result<Amount, UtxoError> {
    if tx.inputs.is_empty() {
        return Err(UtxoError::NoInputs);
    }
    if tx.outputs.is_empty() {
        return Err(UtxoError::NoOutputs);
    }
    if let Some(i) = tx.outputs.iter().position(|o| o.value.is_zero()) {
        return Err(UtxoError::ZeroValueOutput(i));
    }
    let digest = tx.sighash();
    let mut seen = BTreeSet::new();
    let mut spent = Vec::with_capacity(tx.inputs.len());
    for input in &tx.inputs {
        if !seen.insert(input.outpoint) {
            return Err(UtxoError::DuplicateInput(input.outpoint));
        }
        let utxo = utxo_set
            .get(&input.outpoint)
            .ok_or(UtxoError::UnknownOutpoint(input.outpoint))?;
        if !utxo.owner.is_controlled_by(&input.signer.0) {
            return Err(UtxoError::OwnerMismatch(input.outpoint));
        }
        if !scheme.verify(&input.signer, &digest.0, &input.signature) {
            return Err(UtxoError::BadSignature(input.outpoint));
        }
        spent.push(utxo.value);
    }
    let decimals = spent[0].decimals();
    let total_in = Amount::checked_sum(&spent, decimals)?;
    let total_out = Amount::checked_sum(tx.outputs.iter().map(|o| &o.value), decimals)?;
    total_in
        .checked_sub(&total_out)
        .map_err(|_| UtxoError::Overspend { inputs: total_in, outputs: total_out })
}
