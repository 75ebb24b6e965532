//! Tax authorities, signature certificates, ownership proofs and the EOI matrix.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ledger::{Address, PublicKey, SecretKey, Signature, SignatureScheme};

/// Length-prefixed, domain-tagged bytes to sign.
pub(crate) fn framed(tag: &str, parts: &[&[u8]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(64);
    out.extend_from_slice(b"fisc/");
    out.extend_from_slice(tag.as_bytes());
    out.push(0);
    for p in parts {
        out.extend_from_slice(&(p.len() as u32).to_be_bytes());
        out.extend_from_slice(p);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitalSignatureCertificate {
    pub tin: String,
    pub holder_pubkey: PublicKey,
    /// Jurisdiction code of the issuing authority.
    pub issuer: String,
    pub issuer_signature: Signature,
}

impl DigitalSignatureCertificate {
    pub fn signed_bytes(tin: &str, holder: &PublicKey, issuer: &str) -> Vec<u8> {
        framed("dsc", &[tin.as_bytes(), &holder.0, issuer.as_bytes()])
    }

    pub fn verify(&self, scheme: &dyn SignatureScheme, issuer_key: &PublicKey) -> bool {
        scheme.verify(
            issuer_key,
            &Self::signed_bytes(&self.tin, &self.holder_pubkey, &self.issuer),
            &self.issuer_signature,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnershipProof {
    pub tin: String,
    pub address: Address,
    /// Key the wallet signed with; must hash to the address.
    pub wallet_pubkey: PublicKey,
    pub challenge: Vec<u8>,
    pub wallet_signature: Signature,
    /// Signature by the TIN holder's certified key over (tin, address).
    pub dsc_signature: Signature,
}

impl OwnershipProof {
    pub fn challenge_bytes(challenge: &[u8]) -> Vec<u8> {
        framed("challenge", &[challenge])
    }

    pub fn binding_bytes(tin: &str, address: &Address) -> Vec<u8> {
        framed("own", &[tin.as_bytes(), address.text.as_bytes()])
    }

    /// Builds a proof signed by both the wallet key and the DSC holder key.
    pub fn create(
        scheme: &dyn SignatureScheme,
        tin: &str,
        address: Address,
        wallet_secret: &SecretKey,
        holder_secret: &SecretKey,
        challenge: &[u8],
    ) -> OwnershipProof {
        OwnershipProof {
            tin: tin.into(),
            wallet_pubkey: scheme.public_key(wallet_secret),
            challenge: challenge.to_vec(),
            wallet_signature: scheme.sign(wallet_secret, &Self::challenge_bytes(challenge)),
            dsc_signature: scheme.sign(holder_secret, &Self::binding_bytes(tin, &address)),
            address,
        }
    }

    pub fn verify(&self, scheme: &dyn SignatureScheme, dsc: &DigitalSignatureCertificate) -> Result<(), Rejection> {
        if dsc.tin != self.tin {
            return Err(Rejection::UnknownTin(self.tin.clone()));
        }
        if !self.address.is_controlled_by(&self.wallet_pubkey.0) {
            return Err(Rejection::AddressKeyMismatch);
        }
        if !scheme.verify(&self.wallet_pubkey, &Self::challenge_bytes(&self.challenge), &self.wallet_signature) {
            return Err(Rejection::BadWalletSignature);
        }
        if !scheme.verify(&dsc.holder_pubkey, &Self::binding_bytes(&self.tin, &self.address), &self.dsc_signature) {
            return Err(Rejection::BadDscSignature);
        }
        Ok(())
    }
}

/// Why a registration was refused.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    #[error("no certificate for tin {0}")]
    UnknownTin(String),
    #[error("address is not derived from the signing key")]
    AddressKeyMismatch,
    #[error("wallet signature does not verify")]
    BadWalletSignature,
    #[error("certificate-holder signature does not verify")]
    BadDscSignature,
    #[error("address already registered to another tin")]
    Conflict,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("tin {0} already holds a certificate")]
pub struct DuplicateTin(pub String);

#[derive(Debug, Clone)]
pub struct TaxAuthority {
    pub jurisdiction_code: String,
    issuer_secret: SecretKey,
    pub issuer_pubkey: PublicKey,
    certificates: BTreeMap<String, DigitalSignatureCertificate>,
    registry: BTreeMap<String, OwnershipProof>,
}

impl TaxAuthority {
    pub fn new(scheme: &dyn SignatureScheme, code: &str, issuer_secret: SecretKey) -> Self {
        TaxAuthority {
            jurisdiction_code: code.into(),
            issuer_pubkey: scheme.public_key(&issuer_secret),
            issuer_secret,
            certificates: BTreeMap::new(),
            registry: BTreeMap::new(),
        }
    }

    pub fn issue_dsc(
        &mut self,
        scheme: &dyn SignatureScheme,
        tin: &str,
        holder_pubkey: PublicKey,
    ) -> Result<DigitalSignatureCertificate, DuplicateTin> {
        if self.certificates.contains_key(tin) {
            return Err(DuplicateTin(tin.into()));
        }
        let bytes = DigitalSignatureCertificate::signed_bytes(tin, &holder_pubkey, &self.jurisdiction_code);
        let dsc = DigitalSignatureCertificate {
            tin: tin.into(),
            holder_pubkey,
            issuer: self.jurisdiction_code.clone(),
            issuer_signature: scheme.sign(&self.issuer_secret, &bytes),
        };
        self.certificates.insert(tin.into(), dsc.clone());
        Ok(dsc)
    }

    pub(crate) fn sign(&self, scheme: &dyn SignatureScheme, bytes: &[u8]) -> Signature {
        scheme.sign(&self.issuer_secret, bytes)
    }

    pub fn certificate(&self, tin: &str) -> Option<&DigitalSignatureCertificate> {
        self.certificates.get(tin)
    }

    /// Accepts a proof into the registry iff it verifies against this
    /// authority's certificate for the TIN. Does not check other authorities;
    /// see [`super::Network::register_ownership`] for the global rule.
    pub fn register_ownership(&mut self, scheme: &dyn SignatureScheme, proof: OwnershipProof) -> Result<(), Rejection> {
        let dsc = self
            .certificates
            .get(&proof.tin)
            .ok_or_else(|| Rejection::UnknownTin(proof.tin.clone()))?;
        proof.verify(scheme, dsc)?;
        if let Some(existing) = self.registry.get(&proof.address.text) {
            if existing.tin != proof.tin {
                return Err(Rejection::Conflict);
            }
        }
        self.registry.insert(proof.address.text.clone(), proof);
        Ok(())
    }

    pub fn registered(&self, address: &str) -> Option<&OwnershipProof> {
        self.registry.get(address)
    }

    /// Re-checks a stored proof, as done before every affirmative answer.
    pub fn reverify(&self, scheme: &dyn SignatureScheme, address: &str) -> bool {
        match self.registry.get(address) {
            Some(proof) => self
                .certificates
                .get(&proof.tin)
                .is_some_and(|dsc| dsc.verify(scheme, &self.issuer_pubkey) && proof.verify(scheme, dsc).is_ok()),
            None => false,
        }
    }

    pub fn registry_len(&self) -> usize {
        self.registry.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eoi {
    Allow,
    Deny,
}

/// Who may answer whom. Missing cells deny; the diagonal always allows.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EoiMatrix {
    cells: BTreeMap<(String, String), Eoi>,
}

impl EoiMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, asker: &str, responder: &str, value: Eoi) {
        self.cells.insert((asker.into(), responder.into()), value);
    }

    pub fn get(&self, asker: &str, responder: &str) -> Eoi {
        if asker == responder {
            return Eoi::Allow;
        }
        self.cells.get(&(asker.into(), responder.into())).copied().unwrap_or(Eoi::Deny)
    }

    pub fn allows(&self, asker: &str, responder: &str) -> bool {
        self.get(asker, responder) == Eoi::Allow
    }
}
