//! Address and key-string detection, Base58Check and Bech32 codecs.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::hash::{hash160, hex_decode, hex_encode, sha256d};

const BASE58_ALPHABET: &[u8; 58] = b"123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";
const BECH32_CHARSET: &[u8; 32] = b"qpzry9x8gf2tvdw0s3jn54khce6mua7l";
const BECH32_CONST: u32 = 1;
const BECH32M_CONST: u32 = 0x2bc8_30a3;
const MAINNET_HRP: &str = "bc";

const VERSION_P2PKH: u8 = 0x00;
const VERSION_P2SH: u8 = 0x05;
const VERSION_WIF: u8 = 0x80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AddressKind {
    P2pkh,
    P2sh,
    Bech32,
    AccountHex,
    WifKey,
    Mnemonic,
}

/// Encodings `derive_address` can produce from a 20-byte key hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AddressScheme {
    Base58CheckP2pkh,
    Bech32V0,
}

impl AddressScheme {
    pub fn kind(self) -> AddressKind {
        match self {
            AddressScheme::Base58CheckP2pkh => AddressKind::P2pkh,
            AddressScheme::Bech32V0 => AddressKind::Bech32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AddressError {
    #[error("payload must be 20 bytes, got {0}")]
    WrongPayloadLength(usize),
    #[error("invalid character {0:?}")]
    InvalidCharacter(char),
    #[error("checksum mismatch")]
    BadChecksum,
    #[error("unsupported version byte {0:#04x}")]
    UnknownVersion(u8),
    #[error("malformed bech32 string")]
    MalformedBech32,
    #[error("unrecognized address {0:?}")]
    Unrecognized(String),
}

/// A decoded address or key string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Address {
    pub kind: AddressKind,
    pub text: String,
    /// Key hash for P2PKH/P2SH, witness program for Bech32, account bytes
    /// for hex accounts, key bytes for WIF, 11-bit word indices (as u16 BE)
    /// for mnemonics.
    pub payload: Vec<u8>,
}

impl Address {
    /// Fully decodes `text`, verifying checksums where the format has one.
    pub fn parse(text: &str) -> Result<Address, AddressError> {
        let kind = classify_address(text).ok_or_else(|| AddressError::Unrecognized(text.into()))?;
        let payload = match kind {
            AddressKind::Bech32 => {
                let (hrp, version, program) = decode_segwit(text)?;
                if hrp != MAINNET_HRP || version != 0 {
                    return Err(AddressError::MalformedBech32);
                }
                program
            }
            AddressKind::AccountHex => hex_decode(&text[2..]).ok_or(AddressError::Unrecognized(text.into()))?,
            AddressKind::Mnemonic => text
                .split_whitespace()
                .flat_map(|w| {
                    let idx = bip39::Language::English.find_word(w).unwrap_or_default();
                    idx.to_be_bytes()
                })
                .collect(),
            AddressKind::P2pkh | AddressKind::P2sh | AddressKind::WifKey => {
                let mut data = base58check_decode(text)?;
                let version = data.remove(0);
                let expected = match kind {
                    AddressKind::P2pkh => VERSION_P2PKH,
                    AddressKind::P2sh => VERSION_P2SH,
                    _ => VERSION_WIF,
                };
                if version != expected {
                    return Err(AddressError::UnknownVersion(version));
                }
                let len_ok = match kind {
                    AddressKind::WifKey => data.len() == 32 || (data.len() == 33 && data[32] == 0x01),
                    _ => data.len() == 20,
                };
                if !len_ok {
                    return Err(AddressError::WrongPayloadLength(data.len()));
                }
                data
            }
        };
        Ok(Address { kind, text: text.to_string(), payload })
    }

    /// Legacy pay-to-public-key-hash address for a public key.
    pub fn p2pkh_from_pubkey(pubkey: &[u8]) -> Address {
        let payload = hash160(pubkey).to_vec();
        let text = base58check_encode(VERSION_P2PKH, &payload);
        Address { kind: AddressKind::P2pkh, text, payload }
    }

    /// Native segwit v0 address for a public key.
    pub fn bech32_from_pubkey(pubkey: &[u8]) -> Address {
        let payload = hash160(pubkey).to_vec();
        let text = encode_segwit(MAINNET_HRP, 0, &payload);
        Address { kind: AddressKind::Bech32, text, payload }
    }

    /// Re-encodes from kind and payload into the canonical text form.
    pub fn encode(&self) -> String {
        match self.kind {
            AddressKind::P2pkh => base58check_encode(VERSION_P2PKH, &self.payload),
            AddressKind::P2sh => base58check_encode(VERSION_P2SH, &self.payload),
            AddressKind::WifKey => base58check_encode(VERSION_WIF, &self.payload),
            AddressKind::Bech32 => encode_segwit(MAINNET_HRP, 0, &self.payload),
            AddressKind::AccountHex => format!("0x{}", hex_encode(&self.payload)),
            AddressKind::Mnemonic => {
                let words = bip39::Language::English.word_list();
                self.payload
                    .chunks(2)
                    .map(|c| words[u16::from_be_bytes([c[0], c[1]]) as usize & 2047])
                    .collect::<Vec<_>>()
                    .join(" ")
            }
        }
    }

    /// True when this address is controlled by `pubkey` (key-hash kinds only).
    pub fn is_controlled_by(&self, pubkey: &[u8]) -> bool {
        matches!(self.kind, AddressKind::P2pkh | AddressKind::Bech32)
            && self.payload.as_slice() == hash160(pubkey)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Detects what kind of address or key `text` looks like from its prefix,
/// length and alphabet. Checksums are not verified here; use
/// [`Address::parse`] for that.
pub fn classify_address(text: &str) -> Option<AddressKind> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if text.contains(char::is_whitespace) {
        let words: Vec<&str> = text.split_whitespace().collect();
        let known = words
            .iter()
            .all(|w| bip39::Language::English.find_word(w).is_some());
        return (matches!(words.len(), 12 | 18 | 24) && known).then_some(AddressKind::Mnemonic);
    }
    if looks_like_bech32(text) {
        return Some(AddressKind::Bech32);
    }
    if let Some(hex) = text.strip_prefix("0x") {
        return (hex.len() == 40 && hex.bytes().all(|b| b.is_ascii_hexdigit())).then_some(AddressKind::AccountHex);
    }
    if !text.bytes().all(|b| BASE58_ALPHABET.contains(&b)) {
        return None;
    }
    let len = text.len();
    match text.as_bytes()[0] {
        b'1' if (26..=36).contains(&len) => Some(AddressKind::P2pkh),
        b'3' if (26..=36).contains(&len) => Some(AddressKind::P2sh),
        b'K' | b'L' if len == 52 => Some(AddressKind::WifKey),
        b'5' if len == 51 => Some(AddressKind::WifKey),
        _ => None,
    }
}

fn looks_like_bech32(text: &str) -> bool {
    let lower = text.to_ascii_lowercase();
    let mixed = text != lower && text != text.to_ascii_uppercase();
    lower.starts_with("bc1")
        && !mixed
        && (14..=74).contains(&text.len())
        && lower[3..].bytes().all(|b| BECH32_CHARSET.contains(&b))
}

/// Encodes a 20-byte public-key hash as an address string.
pub fn derive_address(pubkey_hash: &[u8], scheme: AddressScheme) -> Result<String, AddressError> {
    if pubkey_hash.len() != 20 {
        return Err(AddressError::WrongPayloadLength(pubkey_hash.len()));
    }
    Ok(match scheme {
        AddressScheme::Base58CheckP2pkh => base58check_encode(VERSION_P2PKH, pubkey_hash),
        AddressScheme::Bech32V0 => encode_segwit(MAINNET_HRP, 0, pubkey_hash),
    })
}

/// Hashes a public key and encodes it; see [`derive_address`].
pub fn derive_address_from_pubkey(pubkey: &[u8], scheme: AddressScheme) -> String {
    derive_address(&hash160(pubkey), scheme).expect("hash160 is 20 bytes")
}

pub fn base58_encode(data: &[u8]) -> String {
    let zeros = data.iter().take_while(|&&b| b == 0).count();
    // Repeated division of the big-endian number by 58, digits little-endian.
    let mut digits: Vec<u8> = Vec::with_capacity(data.len() * 138 / 100 + 1);
    for &byte in &data[zeros..] {
        let mut carry = byte as u32;
        for d in digits.iter_mut() {
            carry += (*d as u32) << 8;
            *d = (carry % 58) as u8;
            carry /= 58;
        }
        while carry > 0 {
            digits.push((carry % 58) as u8);
            carry /= 58;
        }
    }
    let mut out = String::with_capacity(zeros + digits.len());
    out.extend(std::iter::repeat_n('1', zeros));
    out.extend(digits.iter().rev().map(|&d| BASE58_ALPHABET[d as usize] as char));
    out
}

pub fn base58_decode(text: &str) -> Result<Vec<u8>, AddressError> {
    let zeros = text.bytes().take_while(|&b| b == b'1').count();
    let mut bytes: Vec<u8> = Vec::with_capacity(text.len());
    for c in text[zeros..].chars() {
        let value = BASE58_ALPHABET
            .iter()
            .position(|&a| a as char == c)
            .ok_or(AddressError::InvalidCharacter(c))? as u32;
        let mut carry = value;
        for b in bytes.iter_mut() {
            carry += (*b as u32) * 58;
            *b = (carry & 0xff) as u8;
            carry >>= 8;
        }
        while carry > 0 {
            bytes.push((carry & 0xff) as u8);
            carry >>= 8;
        }
    }
    let mut out = vec![0u8; zeros];
    out.extend(bytes.iter().rev());
    Ok(out)
}

/// Version byte + payload + first four bytes of the double SHA-256.
pub fn base58check_encode(version: u8, payload: &[u8]) -> String {
    let mut data = Vec::with_capacity(payload.len() + 5);
    data.push(version);
    data.extend_from_slice(payload);
    let check = sha256d(&data);
    data.extend_from_slice(&check.0[..4]);
    base58_encode(&data)
}

/// Returns version byte followed by payload.
pub fn base58check_decode(text: &str) -> Result<Vec<u8>, AddressError> {
    let mut data = base58_decode(text)?;
    if data.len() < 5 {
        return Err(AddressError::BadChecksum);
    }
    let check = data.split_off(data.len() - 4);
    if sha256d(&data).0[..4] != check[..] {
        return Err(AddressError::BadChecksum);
    }
    Ok(data)
}

fn bech32_polymod(values: &[u8]) -> u32 {
    const GEN: [u32; 5] = [0x3b6a_57b2, 0x2650_8e6d, 0x1ea1_19fa, 0x3d42_33dd, 0x2a14_62b3];
    let mut chk: u32 = 1;
    for &v in values {
        let top = chk >> 25;
        chk = ((chk & 0x01ff_ffff) << 5) ^ v as u32;
        for (i, g) in GEN.iter().enumerate() {
            if (top >> i) & 1 == 1 {
                chk ^= g;
            }
        }
    }
    chk
}

fn hrp_expand(hrp: &str) -> Vec<u8> {
    let mut v: Vec<u8> = hrp.bytes().map(|b| b >> 5).collect();
    v.push(0);
    v.extend(hrp.bytes().map(|b| b & 31));
    v
}

fn convert_bits(data: &[u8], from: u32, to: u32, pad: bool) -> Option<Vec<u8>> {
    let mut acc: u32 = 0;
    let mut bits: u32 = 0;
    let maxv: u32 = (1 << to) - 1;
    let mut out = Vec::new();
    for &value in data {
        if (value as u32) >> from != 0 {
            return None;
        }
        acc = (acc << from) | value as u32;
        bits += from;
        while bits >= to {
            bits -= to;
            out.push(((acc >> bits) & maxv) as u8);
        }
    }
    if pad {
        if bits > 0 {
            out.push(((acc << (to - bits)) & maxv) as u8);
        }
    } else if bits >= from || ((acc << (to - bits)) & maxv) != 0 {
        return None;
    }
    Some(out)
}

/// Segwit address: bech32 for version 0, bech32m for later versions.
pub fn encode_segwit(hrp: &str, version: u8, program: &[u8]) -> String {
    let mut data = vec![version];
    data.extend(convert_bits(program, 8, 5, true).expect("8-bit input"));
    let constant = if version == 0 { BECH32_CONST } else { BECH32M_CONST };
    let mut values = hrp_expand(hrp);
    values.extend_from_slice(&data);
    values.extend_from_slice(&[0; 6]);
    let pm = bech32_polymod(&values) ^ constant;
    data.extend((0..6).map(|i| ((pm >> (5 * (5 - i))) & 31) as u8));
    let mut out = String::from(hrp);
    out.push('1');
    out.extend(data.iter().map(|&d| BECH32_CHARSET[d as usize] as char));
    out
}

/// Returns (hrp, witness version, program).
pub fn decode_segwit(text: &str) -> Result<(String, u8, Vec<u8>), AddressError> {
    let lower = text.to_ascii_lowercase();
    if text != lower && text != text.to_ascii_uppercase() {
        return Err(AddressError::MalformedBech32);
    }
    let sep = lower.rfind('1').ok_or(AddressError::MalformedBech32)?;
    if sep == 0 || sep + 7 > lower.len() || lower.len() > 90 {
        return Err(AddressError::MalformedBech32);
    }
    let hrp = &lower[..sep];
    let data: Vec<u8> = lower[sep + 1..]
        .chars()
        .map(|c| {
            BECH32_CHARSET
                .iter()
                .position(|&a| a as char == c)
                .map(|p| p as u8)
                .ok_or(AddressError::InvalidCharacter(c))
        })
        .collect::<Result<_, _>>()?;
    let mut values = hrp_expand(hrp);
    values.extend_from_slice(&data);
    let residue = bech32_polymod(&values);
    let version = *data.first().ok_or(AddressError::MalformedBech32)?;
    let expected = if version == 0 { BECH32_CONST } else { BECH32M_CONST };
    if residue != expected {
        return Err(AddressError::BadChecksum);
    }
    let program = convert_bits(&data[1..data.len() - 6], 5, 8, false).ok_or(AddressError::MalformedBech32)?;
    if version > 16 || !(2..=40).contains(&program.len()) || (version == 0 && !matches!(program.len(), 20 | 32)) {
        return Err(AddressError::MalformedBech32);
    }
    Ok((hrp.to_string(), version, program))
}
