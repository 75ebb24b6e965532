//! Block template selection by fee per weight unit.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::hash::Hash32;
use crate::amount::Amount;

pub const DEFAULT_WEIGHT_LIMIT: u64 = 4_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MempoolEntry {
    pub txid: Hash32,
    pub fee: Amount,
    pub weight_units: u64,
}

/// Higher fee/weight first; equal rates fall back to the lower txid.
fn by_fee_rate(a: &MempoolEntry, b: &MempoolEntry) -> Ordering {
    let lhs = a.fee.base_units() * b.weight_units as u128;
    let rhs = b.fee.base_units() * a.weight_units as u128;
    rhs.cmp(&lhs).then_with(|| a.txid.cmp(&b.txid))
}

/// Greedy fill by descending fee per weight unit, skipping entries that no
/// longer fit. If the single most valuable entry that fits on its own pays
/// more than the whole greedy selection, that entry alone is returned, so
/// the template never earns less than any single admissible transaction.
///
/// Entries with zero weight are ignored.
pub fn build_block_template(mempool: &[MempoolEntry], weight_limit: u64) -> Vec<MempoolEntry> {
    let mut ranked: Vec<&MempoolEntry> = mempool.iter().filter(|e| e.weight_units > 0).collect();
    ranked.sort_by(|a, b| by_fee_rate(a, b));

    let mut used = 0u64;
    let mut chosen = Vec::new();
    for entry in ranked.iter().copied() {
        if used + entry.weight_units <= weight_limit {
            used += entry.weight_units;
            chosen.push(entry.clone());
        }
    }

    let greedy_fee: u128 = chosen.iter().map(|e| e.fee.base_units()).sum();
    let best_single = ranked
        .iter()
        .filter(|e| e.weight_units <= weight_limit)
        .max_by(|a, b| a.fee.base_units().cmp(&b.fee.base_units()).then_with(|| b.txid.cmp(&a.txid)));
    match best_single {
        Some(single) if single.fee.base_units() > greedy_fee => vec![(*single).clone()],
        _ => chosen,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: u8, fee: u128, weight: u64) -> MempoolEntry {
        MempoolEntry { txid: Hash32([id; 32]), fee: Amount::sats(fee), weight_units: weight }
    }

    #[test]
    fn lighter_tx_ranks_first_at_equal_fee() {
        let t = build_block_template(&[entry(1, 1000, 900), entry(2, 1000, 400)], DEFAULT_WEIGHT_LIMIT);
        assert_eq!(t[0].txid, Hash32([2; 32]));
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn tie_breaks_on_txid() {
        let t = build_block_template(&[entry(9, 500, 100), entry(3, 500, 100)], DEFAULT_WEIGHT_LIMIT);
        assert_eq!(t[0].txid, Hash32([3; 32]));
    }

    #[test]
    fn empty_mempool() {
        assert!(build_block_template(&[], DEFAULT_WEIGHT_LIMIT).is_empty());
    }

    #[test]
    fn respects_limit_and_falls_back_to_best_single() {
        let t = build_block_template(&[entry(1, 2, 1), entry(2, 10, 10)], 10);
        assert_eq!(t, vec![entry(2, 10, 10)]);
        let t = build_block_template(&[entry(1, 5, 6), entry(2, 5, 6)], 10);
        assert_eq!(t.len(), 1);
        let t = build_block_template(&[entry(1, 5, 11)], 10);
        assert!(t.is_empty());
    }
}
