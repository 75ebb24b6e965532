use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use proptest::prelude::*;

use fisc_core::defi::{divergence_loss, liquidate_vault, Compounding, Direction, LiquidityPool, Vault};
use fisc_core::{Amount, Rational};

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// A live pool holding `x` and `y` base units, valued equally.
fn pool(x: u128, y: u128, fee: Rational) -> LiquidityPool {
    let px = Rational::one();
    let py = Rational::new(BigInt::from(x), BigInt::from(y));
    LiquidityPool::new("X", 8, "Y", 8, fee)
        .unwrap()
        .add_liquidity("seed", &Amount::new(x, 8), &Amount::new(y, 8), &px, &py, 0)
        .unwrap()
        .1
}

fn reserve() -> impl Strategy<Value = u128> {
    1_000u128..10u128.pow(15)
}

fn fee() -> impl Strategy<Value = Rational> {
    prop_oneof![Just(rat(1, 10_000)), Just(rat(5, 10_000)), Just(rat(3, 1_000)), Just(rat(1, 100))]
}

fn dir() -> impl Strategy<Value = Direction> {
    prop_oneof![Just(Direction::XToY), Just(Direction::YToX)]
}

fn reserve_in(p: &LiquidityPool, d: Direction) -> u128 {
    match d {
        Direction::XToY => p.reserve_x.base_units(),
        Direction::YToX => p.reserve_y.base_units(),
    }
}

fn flip(d: Direction) -> Direction {
    match d {
        Direction::XToY => Direction::YToX,
        Direction::YToX => Direction::XToY,
    }
}

proptest! {
    #[test]
    fn feeless_swap_keeps_k_within_rounding(x in reserve(), y in reserve(), a in 1u128..10u128.pow(15), d in dir()) {
        let p = pool(x, y, Rational::zero());
        let Ok(out) = p.swap_exact_in(&Amount::new(a, 8), d) else { return Ok(()) };
        let (k0, k1) = (p.k(), out.pool.k());
        // Rounding the output down leaves less than one output unit, worth
        // less than one unit of the new input reserve in K.
        prop_assert!(k1 >= k0);
        prop_assert!(k1 < &k0 + BigUint::from(reserve_in(&out.pool, d)));
    }

    #[test]
    fn fee_strictly_grows_k(x in reserve(), y in reserve(), a in 1u128..10u128.pow(15), f in fee(), d in dir()) {
        let p = pool(x, y, f);
        let Ok(out) = p.swap_exact_in(&Amount::new(a, 8), d) else { return Ok(()) };
        prop_assert!(out.pool.k() > p.k());
    }

    #[test]
    fn round_trip_never_profits(x in reserve(), y in reserve(), a in 1u128..10u128.pow(14), f in fee(), d in dir()) {
        let amount = Amount::new(a, 8);
        for (fee, strict) in [(Rational::zero(), false), (f, true)] {
            let p = pool(x, y, fee);
            let Ok(first) = p.swap_exact_in(&amount, d) else { continue };
            let Ok(back) = first.pool.swap_exact_in(&first.amount_out, flip(d)) else { continue };
            let got = back.amount_out.base_units();
            if strict {
                prop_assert!(got < a);
            } else {
                prop_assert!(got <= a);
            }
        }
    }

    #[test]
    fn divergence_loss_sign_and_symmetry(e in -12.0f64..12.0) {
        let p = e.exp();
        let dl = divergence_loss(p).unwrap();
        prop_assert!(dl <= 0.0);
        prop_assert!((dl - divergence_loss(1.0 / p).unwrap()).abs() <= 1e-12);
        // Near p = 1 the loss is below f64 resolution; away from it, strict.
        if e.abs() > 1e-3 {
            prop_assert!(dl < 0.0);
        }
    }

    #[test]
    fn lp_units_and_withdrawals_account_for_everything(
        x in reserve(),
        y in reserve(),
        deposits in prop::collection::vec(1u128..10u128.pow(12), 1..6),
        swaps in prop::collection::vec((1u128..10u128.pow(12), any::<bool>()), 0..6),
    ) {
        let mut p = pool(x, y, rat(3, 1000));
        let mut units = vec![p.total_lp_units];
        for (i, dx) in deposits.iter().enumerate() {
            // Match the current reserve ratio so the deposit is equal-value.
            let dy = dx * p.reserve_y.base_units() / p.reserve_x.base_units();
            if dy == 0 {
                continue;
            }
            let px = Rational::one();
            let py = Rational::new(BigInt::from(p.reserve_x.base_units()), BigInt::from(p.reserve_y.base_units()));
            if let Ok((pos, next)) = p.add_liquidity(&format!("lp{i}"), &Amount::new(*dx, 8), &Amount::new(dy, 8), &px, &py, 0) {
                units.push(pos.lp_units);
                p = next;
            }
        }
        prop_assert_eq!(units.iter().sum::<u128>(), p.total_lp_units);
        for (a, x_to_y) in swaps {
            let d = if x_to_y { Direction::XToY } else { Direction::YToX };
            if let Ok(s) = p.swap_exact_in(&Amount::new(a, 8), d) {
                p = s.pool;
            }
        }
        let (rx, ry) = (p.reserve_x.base_units(), p.reserve_y.base_units());
        let (mut out_x, mut out_y) = (0u128, 0u128);
        for u in units {
            let w = p.redeem_units(u).unwrap();
            out_x += w.x_out.base_units();
            out_y += w.y_out.base_units();
            p = w.pool;
        }
        prop_assert_eq!((out_x, out_y), (rx, ry));
        prop_assert_eq!(p.total_lp_units, 0);
    }

    #[test]
    fn liquidation_conserves_value(
        collateral in 1u128..10u128.pow(22),
        price_cents in 1i64..1_000_000,
        excess in 1u128..10u128.pow(22),
        penalty_bp in 0i64..2_000,
    ) {
        // Debt just above collateral value / 1.5, so the vault is under water
        // by a random margin.
        let value = collateral * price_cents as u128 / 100;
        let debt = value * 2 / 3 + 1 + excess;
        let vault = Vault {
            id: "v".into(),
            collateral_asset: "ETH".into(),
            collateral_amount: Amount::wei(collateral),
            debt: Amount::new(debt, 18),
            liquidation_ratio: rat(3, 2),
            stability_fee_rate: Rational::zero(),
            last_accrual: 0,
            compounding: Compounding::Continuous,
        };
        let price = rat(price_cents, 100);
        prop_assert!(vault.is_liquidatable(&price));
        let l = liquidate_vault(&vault, &price, &rat(penalty_bp, 10_000)).unwrap();
        prop_assert_eq!(&l.debt_repaid + &l.penalty + &l.returned_value, vault.collateral_value(&price));
        prop_assert_eq!(&l.debt_repaid + &l.shortfall, vault.debt.to_rational());
    }
}
