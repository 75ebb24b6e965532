use num_bigint::BigInt;
use proptest::prelude::*;

use fisc_core::tax::{compute_report, AccountingMethod, ChainEventRecord, EventKind, JurisdictionPolicy, TaxReport, Term};
use fisc_core::{Amount, Rational};

const START: i64 = 1_672_531_200; // 2023-01-01
const DAY: i64 = 86_400;

#[derive(Debug, Clone)]
enum Op {
    Buy { qty: u128, cents: i64 },
    Sell { permille: u128, cents: i64 },
    Move { permille: u128 },
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        3 => (1u128..1_000_000_000, 100i64..10_000_000).prop_map(|(qty, cents)| Op::Buy { qty, cents }),
        2 => (1u128..=1000, 100i64..10_000_000).prop_map(|(permille, cents)| Op::Sell { permille, cents }),
        1 => (1u128..=1000).prop_map(|permille| Op::Move { permille }),
    ]
}

fn price(cents: i64) -> Rational {
    Rational::new(BigInt::from(cents), BigInt::from(100))
}

/// Events spread over about three years, seq spaced by 10 so extra events
/// can be slotted in. Sales never exceed holdings.
fn build(ops: &[Op], with_moves: bool) -> Vec<ChainEventRecord> {
    let mut held = 0u128;
    let mut last = 10_000i64;
    let mut out = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        let seq = 10 * (i as u64 + 1);
        let ts = START + i as i64 * 40 * DAY;
        match *op {
            Op::Buy { qty, cents } => {
                held += qty;
                last = cents;
                out.push(ChainEventRecord::new(seq, ts, EventKind::Purchase, "BTC", Amount::new(qty, 8), price(cents)));
            }
            Op::Sell { permille, cents } => {
                let qty = held * permille / 1000;
                if qty == 0 {
                    continue;
                }
                held -= qty;
                last = cents;
                out.push(ChainEventRecord::new(seq, ts, EventKind::Sale, "BTC", Amount::new(qty, 8), price(cents)));
            }
            Op::Move { permille } => {
                let qty = held * permille / 1000;
                if with_moves && qty > 0 {
                    out.push(ChainEventRecord::new(seq, ts, EventKind::SelfTransfer, "BTC", Amount::new(qty, 8), price(last)));
                }
            }
        }
    }
    out
}

fn methods() -> impl Strategy<Value = AccountingMethod> {
    prop::sample::select(vec![
        AccountingMethod::Fifo,
        AccountingMethod::Lifo,
        AccountingMethod::Hifo,
        AccountingMethod::AvgTotal,
        AccountingMethod::AvgMoving,
        AccountingMethod::Pvct,
    ])
}

fn report(events: &[ChainEventRecord], m: AccountingMethod) -> TaxReport {
    compute_report(events, &JurisdictionPolicy::default(), m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn quantity_and_basis_are_conserved(ops in prop::collection::vec(op(), 1..16), m in methods()) {
        let events = build(&ops, false);
        let r = report(&events, m);
        let buys = events.iter().filter(|e| e.kind == EventKind::Purchase);
        let acquired: u128 = buys.clone().map(|e| e.quantity.base_units()).sum();
        let created: Rational = buys.map(|e| e.fmv_total()).sum();
        let sales = r.lines.iter().filter(|l| l.kind == EventKind::Sale);
        let disposed: u128 = sales.clone().map(|l| l.qty.base_units()).sum();
        let consumed: Rational = sales.map(|l| l.basis.clone()).sum();
        let held: u128 = r.holdings.iter().map(|l| l.remaining_qty.base_units()).sum();
        let remaining: Rational = r.holdings.iter().map(|l| l.total_basis()).sum();
        prop_assert_eq!(acquired - disposed, held);
        prop_assert_eq!(consumed + remaining, created);
    }

    #[test]
    fn totals_are_the_sum_of_lines(ops in prop::collection::vec(op(), 1..16), m in methods()) {
        let r = report(&build(&ops, false), m);
        for (year, totals) in &r.years {
            let sum = |term: Term| -> Rational {
                r.lines.iter().filter(|l| l.tax_year == *year && l.term == term).map(|l| l.gain.clone()).sum()
            };
            prop_assert_eq!(&totals.short_term_gain, &sum(Term::Short));
            prop_assert_eq!(&totals.long_term_gain, &sum(Term::Long));
            prop_assert_eq!(&totals.ordinary_income, &sum(Term::Income));
            prop_assert_eq!(&totals.deductible_expenses, &sum(Term::Deduction));
            prop_assert_eq!(&totals.non_deductible_losses, &sum(Term::NonDeductible));
            prop_assert_eq!(&totals.exempt_gain, &sum(Term::Exempt));
            prop_assert_eq!(&totals.withholding_owed, &sum(Term::Withholding));
        }
    }

    #[test]
    fn self_transfers_change_no_total(ops in prop::collection::vec(op(), 1..16), m in methods()) {
        let plain = report(&build(&ops, false), m);
        let moved = report(&build(&ops, true), m);
        prop_assert_eq!(plain.totals_json(), moved.totals_json());
        prop_assert_eq!(plain.holdings, moved.holdings);
    }

    #[test]
    fn reports_are_deterministic(ops in prop::collection::vec(op(), 1..16), m in methods()) {
        let events = build(&ops, true);
        let (a, b) = (report(&events, m), report(&events, m));
        prop_assert_eq!(a.to_csv(), b.to_csv());
        prop_assert_eq!(a.totals_json(), b.totals_json());
    }
}
