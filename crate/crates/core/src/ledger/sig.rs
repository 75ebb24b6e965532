//! Pluggable signature schemes.
//!
//! Validation code only ever talks to [`SignatureScheme`]. [`MockScheme`] is a
//! deterministic hash construction used by default so simulation traces are
//! reproducible byte-for-byte; [`Secp256k1Scheme`] is real ECDSA.

use std::fmt;

use k256::ecdsa::signature::{Signer, Verifier};
use serde::{Deserialize, Serialize};

use super::hash::{hex_encode, sha256};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SecretKey(pub [u8; 32]);

impl SecretKey {
    /// Deterministic key material from a label, for simulations and tests.
    pub fn from_seed(seed: &[u8]) -> SecretKey {
        SecretKey(sha256(seed).0)
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PublicKey(pub Vec<u8>);

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", hex_encode(&self.0))
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature(pub Vec<u8>);

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({})", hex_encode(&self.0))
    }
}

pub trait SignatureScheme {
    fn public_key(&self, secret: &SecretKey) -> PublicKey;
    fn sign(&self, secret: &SecretKey, message: &[u8]) -> Signature;
    fn verify(&self, public: &PublicKey, message: &[u8], signature: &Signature) -> bool;
}

/// Hash-based stand-in: `pk = H("pk" ‖ sk)`, `sig = H("sig" ‖ pk ‖ msg)`.
///
/// Not unforgeable (anyone holding `pk` can compute a signature); it only
/// binds signatures to a key and a message, which is what the simulations
/// exercise.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockScheme;

impl MockScheme {
    fn tag(public: &PublicKey, message: &[u8]) -> Vec<u8> {
        let mut buf = Vec::with_capacity(3 + public.0.len() + message.len());
        buf.extend_from_slice(b"sig");
        buf.extend_from_slice(&public.0);
        buf.extend_from_slice(message);
        sha256(&buf).0.to_vec()
    }
}

impl SignatureScheme for MockScheme {
    fn public_key(&self, secret: &SecretKey) -> PublicKey {
        let mut buf = b"pk".to_vec();
        buf.extend_from_slice(&secret.0);
        PublicKey(sha256(&buf).0.to_vec())
    }

    fn sign(&self, secret: &SecretKey, message: &[u8]) -> Signature {
        Signature(Self::tag(&self.public_key(secret), message))
    }

    fn verify(&self, public: &PublicKey, message: &[u8], signature: &Signature) -> bool {
        signature.0 == Self::tag(public, message)
    }
}

/// ECDSA over secp256k1 with RFC 6979 nonces; public keys are compressed SEC1.
#[derive(Debug, Clone, Copy, Default)]
pub struct Secp256k1Scheme;

impl Secp256k1Scheme {
    fn signing_key(secret: &SecretKey) -> k256::ecdsa::SigningKey {
        // A 32-byte hash output is a valid scalar except with negligible
        // probability; rehash until it is.
        let mut bytes = secret.0;
        loop {
            if let Ok(k) = k256::ecdsa::SigningKey::from_slice(&bytes) {
                return k;
            }
            bytes = sha256(&bytes).0;
        }
    }
}

impl SignatureScheme for Secp256k1Scheme {
    fn public_key(&self, secret: &SecretKey) -> PublicKey {
        let key = Self::signing_key(secret);
        PublicKey(key.verifying_key().to_encoded_point(true).as_bytes().to_vec())
    }

    fn sign(&self, secret: &SecretKey, message: &[u8]) -> Signature {
        let sig: k256::ecdsa::Signature = Self::signing_key(secret).sign(message);
        Signature(sig.to_bytes().to_vec())
    }

    fn verify(&self, public: &PublicKey, message: &[u8], signature: &Signature) -> bool {
        let Ok(key) = k256::ecdsa::VerifyingKey::from_sec1_bytes(&public.0) else {
            return false;
        };
        let Ok(sig) = k256::ecdsa::Signature::from_slice(&signature.0) else {
            return false;
        };
        key.verify(message, &sig).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exercise(scheme: &dyn SignatureScheme) {
        let sk = SecretKey::from_seed(b"alice");
        let other = SecretKey::from_seed(b"mallory");
        let pk = scheme.public_key(&sk);
        let sig = scheme.sign(&sk, b"hello");
        assert!(scheme.verify(&pk, b"hello", &sig));
        assert!(!scheme.verify(&pk, b"hellp", &sig));
        assert!(!scheme.verify(&scheme.public_key(&other), b"hello", &sig));
        let mut tampered = sig.clone();
        tampered.0[0] ^= 1;
        assert!(!scheme.verify(&pk, b"hello", &tampered));
        assert_eq!(scheme.sign(&sk, b"hello"), sig, "deterministic");
    }

    #[test]
    fn mock_scheme_properties() {
        exercise(&MockScheme);
    }

    #[test]
    fn secp256k1_scheme_properties() {
        exercise(&Secp256k1Scheme);
        let pk = Secp256k1Scheme.public_key(&SecretKey::from_seed(b"alice"));
        assert_eq!(pk.0.len(), 33);
        assert!(!Secp256k1Scheme.verify(&PublicKey(vec![1, 2, 3]), b"x", &Signature(vec![0; 64])));
    }
}
