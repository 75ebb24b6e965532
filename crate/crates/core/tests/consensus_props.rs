use num_bigint::{BigInt, BigUint};
use proptest::prelude::*;

use fisc_core::consensus::{
    attestation_score, block_subsidy, mev_net_builder_fee, pos_issuance_and_return, retarget_difficulty,
    AttestationVotes, DutyEvent, EconConfig, MevBlockAccounting, RetargetRule, RewardSchedule, Validator, ValidatorSet,
};
use fisc_core::{Amount, Rational};

/// Subsidy paid over heights `0..=h`, summed era by era.
fn cumulative(h: u64, s: &RewardSchedule) -> u128 {
    let interval = s.halving_interval_blocks;
    let mut total = 0u128;
    let mut start = 0u64;
    while start <= h {
        let end = (start + interval - 1).min(h);
        total += block_subsidy(start, s).base_units() * (end - start + 1) as u128;
        start += interval;
    }
    total
}

fn votes() -> impl Strategy<Value = (bool, bool, bool)> {
    (any::<bool>(), any::<bool>(), any::<bool>())
}

fn wei() -> impl Strategy<Value = u128> {
    0u128..10u128.pow(21)
}

proptest! {
    #[test]
    fn subsidy_never_grows_and_cumulative_stays_under_cap(a in 0u64..8_000_000, b in 0u64..8_000_000) {
        let s = RewardSchedule::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(block_subsidy(lo, &s) >= block_subsidy(hi, &s));
        let (cl, ch) = (cumulative(lo, &s), cumulative(hi, &s));
        prop_assert!(cl <= ch);
        prop_assert!(ch <= s.supply_cap.base_units());
    }

    #[test]
    fn retarget_is_homogeneous_before_clamping(
        old in 1u64..u64::MAX,
        span in 1i64..10_000_000,
        scale in 1i64..50,
    ) {
        let rule = RetargetRule {
            clamp_factor: Rational::from_integer(BigInt::from(1_000_000_000u64)),
            ..RetargetRule::default()
        };
        let old = BigUint::from(old);
        let base = retarget_difficulty(&old, span, &rule).unwrap();
        let scaled = retarget_difficulty(&old, span * scale, &rule).unwrap();
        // Each result is floored once, so they agree up to scale - 1.
        let s = BigUint::from(scale as u64);
        prop_assert!(scaled >= &base * &s);
        prop_assert!(scaled < &base * &s + &s);
    }

    #[test]
    fn pos_scaling_is_exact(n in 1u64..(1 << 40), c in 1e-6f64..1e9, c_prime in 1e-6f64..1e9) {
        let a = pos_issuance_and_return(n, c, c_prime).unwrap();
        let b = pos_issuance_and_return(4 * n, c, c_prime).unwrap();
        prop_assert_eq!(b.annual_issuance, 2.0 * a.annual_issuance);
        prop_assert_eq!(b.per_validator_return, a.per_validator_return / 2.0);
    }

    #[test]
    fn earlier_inclusion_never_loses_a_component((s, t, h) in votes(), d1 in 0u32..64, d2 in 0u32..64) {
        let (early, late) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let v = |d| AttestationVotes { source_correct: s, target_correct: t, head_correct: h, inclusion_delay: d };
        let (e, l) = (attestation_score(&v(early)), attestation_score(&v(late)));
        prop_assert!(e.source || !l.source);
        prop_assert!(e.target || !l.target);
        prop_assert!(e.head || !l.head);
    }

    #[test]
    fn mev_fee_is_linear_in_each_field(
        reward in wei(),
        payments in prop::collection::vec(wei(), 0..4),
        payout in wei(),
        delta in wei(),
        which in 0usize..3,
    ) {
        let acc = MevBlockAccounting {
            block_reward_to_builder: Amount::wei(reward),
            searcher_payments: payments.iter().map(|p| Amount::wei(*p)).collect(),
            proposer_payout: Amount::wei(payout),
        };
        let base = mev_net_builder_fee(&acc).unwrap().base_units();
        let mut bumped = acc.clone();
        let d = delta as i128;
        let want = match which {
            0 => {
                bumped.block_reward_to_builder = Amount::wei(reward + delta);
                base + d
            }
            1 => {
                bumped.searcher_payments.push(Amount::wei(delta));
                base + d
            }
            _ => {
                bumped.proposer_payout = Amount::wei(payout + delta);
                base - d
            }
        };
        prop_assert_eq!(mev_net_builder_fee(&bumped).unwrap().base_units(), want);
    }

    #[test]
    fn slashed_validators_never_earn(
        stakes in prop::collection::vec(32u128..64, 1..8),
        slashed in prop::collection::vec(any::<bool>(), 8),
        reward in 1u128..10u128.pow(20),
    ) {
        let params = EconConfig::default().pos;
        let e18 = 10u128.pow(18);
        let mut set = ValidatorSet::new();
        for (i, s) in stakes.iter().enumerate() {
            set.insert(Validator::activate(format!("v{i}"), Amount::wei(s * e18), &params).unwrap()).unwrap();
        }
        for i in (0..stakes.len()).filter(|i| slashed[*i]) {
            set.apply(&format!("v{i}"), DutyEvent::DoubleVote, &params).unwrap();
        }
        let before: Vec<Amount> = set.iter().map(|v| v.stake).collect();
        let (paid, _) = set.distribute(&Amount::wei(reward)).unwrap();
        let all = AttestationVotes { source_correct: true, target_correct: true, head_correct: true, inclusion_delay: 1 };
        for (i, v) in set.iter().enumerate() {
            if slashed[i] {
                prop_assert!(!paid.contains_key(&v.id));
                prop_assert_eq!(v.stake, before[i]);
                prop_assert!(set.clone().credit_attestation(&v.id, &all, &params).is_err());
                prop_assert!(set.clone().apply(&v.id, DutyEvent::MissedHead, &params).is_err());
            }
        }
    }
}
