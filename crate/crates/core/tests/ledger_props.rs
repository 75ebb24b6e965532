use proptest::prelude::*;

use fisc_core::ledger::{
    build_block_template, classify_address, compute_merkle_root, derive_address, mine_nonce, sha256d, validate_utxo_tx,
    verify_pow, Address, AddressScheme, BlockHeader, Hash32, MempoolEntry, MockScheme, OutPoint, SecretKey,
    SignatureScheme, TxOutput, Utxo, UtxoError, UtxoSet, UtxoTransaction,
};
use fisc_core::Amount;
use num_bigint::BigUint;
use num_traits::One;

fn scheme() -> impl Strategy<Value = AddressScheme> {
    prop_oneof![Just(AddressScheme::Base58CheckP2pkh), Just(AddressScheme::Bech32V0)]
}

/// Input values and output values that never exceed them.
fn spend_shape() -> impl Strategy<Value = (Vec<u128>, Vec<u128>)> {
    prop::collection::vec(1u128..10_000_000_000, 1..5).prop_flat_map(|ins| {
        let total: u128 = ins.iter().sum();
        let outs = prop::collection::vec(1u128..=total, 1..5).prop_map(move |mut outs| {
            // Scale down until the outputs fit.
            while outs.iter().sum::<u128>() > total {
                for o in outs.iter_mut() {
                    *o = (*o / 2).max(1);
                }
                if outs.len() as u128 > total {
                    outs.truncate(total as usize);
                }
            }
            outs
        });
        (Just(ins), outs)
    })
}

proptest! {
    #[test]
    fn classify_matches_derived_scheme(payload in prop::array::uniform20(any::<u8>()), s in scheme()) {
        let text = derive_address(&payload, s).unwrap();
        prop_assert_eq!(classify_address(&text), Some(s.kind()));
        let parsed = Address::parse(&text).unwrap();
        prop_assert_eq!(parsed.encode(), text);
        prop_assert_eq!(parsed.payload, payload.to_vec());
    }

    #[test]
    fn spend_conserves_value_and_cannot_repeat((ins, outs) in spend_shape()) {
        let alice = SecretKey::from_seed(b"alice");
        let owner = Address::p2pkh_from_pubkey(&MockScheme.public_key(&alice).0);
        let mut set = UtxoSet::new();
        let mut spends = Vec::new();
        for (i, v) in ins.iter().enumerate() {
            let op = OutPoint { txid: sha256d(&(i as u32).to_le_bytes()), index: i as u32 };
            set.insert(Utxo { outpoint: op, owner: owner.clone(), value: Amount::sats(*v) }).unwrap();
            spends.push((op, &alice));
        }
        let outputs: Vec<TxOutput> = outs
            .iter()
            .enumerate()
            .map(|(i, v)| TxOutput { address: Address::p2pkh_from_pubkey(&[i as u8; 33]), value: Amount::sats(*v) })
            .collect();
        let tx = UtxoTransaction::signed(&MockScheme, &spends, outputs, 1_000);
        let fee = validate_utxo_tx(&tx, &set, &MockScheme).unwrap();
        let sum_in: u128 = ins.iter().sum();
        let sum_out: u128 = outs.iter().sum();
        prop_assert_eq!(sum_in, sum_out + fee.base_units());

        prop_assert_eq!(set.apply(&tx, &MockScheme).unwrap(), fee);
        prop_assert!(matches!(validate_utxo_tx(&tx, &set, &MockScheme), Err(UtxoError::UnknownOutpoint(_))));
    }

    #[test]
    fn merkle_root_sees_every_flip(
        leaves in prop::collection::vec(prop::array::uniform32(any::<u8>()), 1..17),
        pick in any::<prop::sample::Index>(),
        byte in 0usize..32,
        bit in 0u8..8,
    ) {
        let leaves: Vec<Hash32> = leaves.into_iter().map(Hash32).collect();
        let before = compute_merkle_root(&leaves).unwrap();
        let mut flipped = leaves.clone();
        let i = pick.index(flipped.len());
        flipped[i].0[byte] ^= 1 << bit;
        prop_assert_ne!(compute_merkle_root(&flipped).unwrap(), before);
    }

    #[test]
    fn template_respects_limit_and_beats_any_single(
        entries in prop::collection::vec((0u128..1_000_000, 1u64..5_000), 0..30),
        limit in 1u64..20_000,
    ) {
        let mempool: Vec<MempoolEntry> = entries
            .iter()
            .enumerate()
            .map(|(i, (fee, w))| MempoolEntry { txid: sha256d(&(i as u64).to_le_bytes()), fee: Amount::sats(*fee), weight_units: *w })
            .collect();
        let t = build_block_template(&mempool, limit);
        prop_assert!(t.iter().map(|e| e.weight_units).sum::<u64>() <= limit);
        let total: u128 = t.iter().map(|e| e.fee.base_units()).sum();
        let best = mempool.iter().filter(|e| e.weight_units <= limit).map(|e| e.fee.base_units()).max().unwrap_or(0);
        prop_assert!(total >= best);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mined_nonce_verifies(prev in prop::array::uniform32(any::<u8>()), time in any::<u32>()) {
        let header = BlockHeader {
            version: 1,
            prev_hash: Hash32(prev),
            merkle_root: Hash32([7; 32]),
            time,
            target: BigUint::one() << 250u32,
            nonce: 0,
        };
        if let Ok(n) = mine_nonce(&header, 5_000) {
            let mut h = header;
            h.nonce = n;
            prop_assert!(verify_pow(&h));
        }
    }
}
