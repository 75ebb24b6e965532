//! Block headers, merkle roots and proof-of-work.

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::hash::{sha256d, Hash32};

pub const HEADER_LEN: usize = 80;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub version: i32,
    pub prev_hash: Hash32,
    pub merkle_root: Hash32,
    pub time: u32,
    /// Full 256-bit target. Serialization carries its compact encoding.
    #[serde(with = "hex_biguint")]
    pub target: BigUint,
    pub nonce: u32,
}

impl BlockHeader {
    /// 80 bytes: version (LE), prev hash, merkle root, time (LE),
    /// compact target (LE), nonce (LE).
    pub fn serialize(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&self.version.to_le_bytes());
        out[4..36].copy_from_slice(&self.prev_hash.0);
        out[36..68].copy_from_slice(&self.merkle_root.0);
        out[68..72].copy_from_slice(&self.time.to_le_bytes());
        out[72..76].copy_from_slice(&target_to_compact(&self.target).to_le_bytes());
        out[76..80].copy_from_slice(&self.nonce.to_le_bytes());
        out
    }

    pub fn block_id(&self) -> Hash32 {
        sha256d(&self.serialize())
    }

    /// Block id as a big-endian 256-bit integer.
    pub fn hash_value(&self) -> BigUint {
        self.block_id().to_biguint()
    }
}

/// Encodes a target as the 32-bit "nBits" form: one size byte and a 3-byte
/// mantissa. Lossy for targets with more than 3 significant bytes.
pub fn target_to_compact(target: &BigUint) -> u32 {
    if target.is_zero() {
        return 0;
    }
    let bytes = target.to_bytes_be();
    let mut size = bytes.len() as u32;
    let mut mantissa: u32 = if size <= 3 {
        let mut m = 0u32;
        for &b in &bytes {
            m = (m << 8) | b as u32;
        }
        m << (8 * (3 - size))
    } else {
        ((bytes[0] as u32) << 16) | ((bytes[1] as u32) << 8) | bytes[2] as u32
    };
    if mantissa & 0x0080_0000 != 0 {
        mantissa >>= 8;
        size += 1;
    }
    mantissa | (size << 24)
}

pub fn compact_to_target(compact: u32) -> BigUint {
    let size = compact >> 24;
    let mantissa = BigUint::from(compact & 0x007f_ffff);
    if size <= 3 {
        mantissa >> (8 * (3 - size))
    } else {
        mantissa << (8 * (size - 3))
    }
}

/// True iff the header hash, read big-endian, is strictly below its target.
pub fn verify_pow(header: &BlockHeader) -> bool {
    header.hash_value() < header.target
}

/// Serde adapter writing 256-bit integers as `0x`-prefixed hex.
pub mod hex_biguint {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("0x{}", v.to_str_radix(16)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).ok_or_else(|| serde::de::Error::custom(format!("invalid hex integer {s:?}")))
    }

    pub fn parse(s: &str) -> Option<BigUint> {
        let digits = s.strip_prefix("0x").unwrap_or(s);
        BigUint::parse_bytes(digits.as_bytes(), 16)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MineError {
    #[error("no nonce found in {0} attempts")]
    Exhausted(u64),
    #[error("max_iters must be positive")]
    ZeroIterations,
}

/// Smallest nonce in `[0, max_iters)` for which the header verifies.
/// The template's own nonce is ignored.
pub fn mine_nonce(template: &BlockHeader, max_iters: u64) -> Result<u32, MineError> {
    if max_iters == 0 {
        return Err(MineError::ZeroIterations);
    }
    let limit = max_iters.min(1 << 32);
    let mut header = template.clone();
    for nonce in 0..limit {
        header.nonce = nonce as u32;
        if verify_pow(&header) {
            return Ok(header.nonce);
        }
    }
    Err(MineError::Exhausted(limit))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("merkle root of an empty list")]
pub struct EmptyMerkle;

/// Pairwise double-SHA-256 up to a single root; an odd level duplicates its
/// last element. A single leaf is its own root.
pub fn compute_merkle_root(leaves: &[Hash32]) -> Result<Hash32, EmptyMerkle> {
    if leaves.is_empty() {
        return Err(EmptyMerkle);
    }
    let mut level = leaves.to_vec();
    while level.len() > 1 {
        if level.len() % 2 == 1 {
            level.push(*level.last().expect("non-empty"));
        }
        level = level
            .chunks(2)
            .map(|pair| {
                let mut buf = [0u8; 64];
                buf[..32].copy_from_slice(&pair[0].0);
                buf[32..].copy_from_slice(&pair[1].0);
                sha256d(&buf)
            })
            .collect();
    }
    Ok(level[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn header(target: BigUint) -> BlockHeader {
        BlockHeader {
            version: 1,
            prev_hash: Hash32([3; 32]),
            merkle_root: Hash32([9; 32]),
            time: 1_231_006_505,
            target,
            nonce: 0,
        }
    }

    fn max_target() -> BigUint {
        (BigUint::one() << 256) - 1u32
    }

    #[test]
    fn serialization_layout() {
        let mut h = header(compact_to_target(0x1d00_ffff));
        h.nonce = 0x0102_0304;
        let bytes = h.serialize();
        assert_eq!(&bytes[0..4], &[1, 0, 0, 0]);
        assert_eq!(&bytes[4..36], &[3; 32]);
        assert_eq!(&bytes[72..76], &0x1d00_ffffu32.to_le_bytes());
        assert_eq!(&bytes[76..80], &[4, 3, 2, 1]);
    }

    #[test]
    fn compact_round_trip_on_canonical_values() {
        for c in [0x1d00_ffffu32, 0x1b04_864c, 0x0312_3456, 0x2100_ffff] {
            assert_eq!(target_to_compact(&compact_to_target(c)), c);
        }
        assert_eq!(target_to_compact(&BigUint::zero()), 0);
    }

    #[test]
    fn extreme_targets() {
        assert!(verify_pow(&header(max_target())));
        assert!(!verify_pow(&header(BigUint::zero())));
        assert_eq!(mine_nonce(&header(max_target()), 10), Ok(0));
        assert_eq!(mine_nonce(&header(BigUint::zero()), 1), Err(MineError::Exhausted(1)));
        assert_eq!(mine_nonce(&header(BigUint::zero()), 0), Err(MineError::ZeroIterations));
    }

    #[test]
    fn mined_nonce_is_smallest_and_verifies() {
        let t = BigUint::one() << 248;
        let template = header(t);
        let nonce = mine_nonce(&template, 100_000).unwrap();
        let mut h = template.clone();
        h.nonce = nonce;
        assert!(verify_pow(&h));
        for n in 0..nonce {
            h.nonce = n;
            assert!(!verify_pow(&h));
        }
    }

    #[test]
    fn merkle_cases() {
        let h1 = Hash32(core::array::from_fn(|i| i as u8));
        let h2 = Hash32(core::array::from_fn(|i| 32 + i as u8));
        assert_eq!(compute_merkle_root(&[h1]), Ok(h1));
        // Frozen from Python hashlib: dsha256(h1 || h2).
        assert_eq!(
            compute_merkle_root(&[h1, h2]).unwrap().to_hex(),
            "01c9f464780a1b6af4eb400fe2f2896cfb2169f5a65701439e4c2c4e213903ef"
        );
        // Odd level duplicates the last leaf.
        let three = compute_merkle_root(&[h1, h2, h1]).unwrap();
        let four = compute_merkle_root(&[h1, h2, h1, h1]).unwrap();
        assert_eq!(three, four);
        assert_eq!(compute_merkle_root(&[]), Err(EmptyMerkle));
    }
}
