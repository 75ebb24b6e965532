//! Lots and their consumption under each accounting method.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::event::EventKind;
use super::policy::AccountingMethod;
use super::TaxError;
use crate::amount::Amount;
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lot {
    /// `seq` of the event that created the lot.
    pub lot_id: u64,
    pub asset: String,
    pub remaining_qty: Amount,
    /// Basis per whole unit.
    #[serde(with = "crate::scalar::serde_rational")]
    pub unit_basis: Rational,
    pub acquired_at: i64,
    pub source: EventKind,
}

impl Lot {
    pub fn total_basis(&self) -> Rational {
        self.remaining_qty.to_rational() * &self.unit_basis
    }
}

/// One lot's contribution to a disposal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsumedLot {
    pub lot_id: u64,
    pub qty: Amount,
    pub basis: Rational,
    pub acquired_at: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisposalResult {
    pub consumed: Vec<ConsumedLot>,
    pub proceeds: Rational,
    pub basis: Rational,
    pub gain: Rational,
}

/// Extra inputs some methods need.
#[derive(Debug, Clone, Default)]
pub struct DisposeContext {
    /// Lots named for SpecID, consumed in this order.
    pub specid: Vec<u64>,
    /// Portfolio fair market value at the disposal (PVCT).
    pub portfolio_fmv: Option<Rational>,
    /// Fixed per-unit basis for the year (AvgTotal).
    pub average_basis: Option<Rational>,
}

/// All open lots of one portfolio, per asset in acquisition order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LotStore {
    lots: BTreeMap<String, Vec<Lot>>,
}

impl LotStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, lot: Lot) {
        if lot.remaining_qty.base_units() > 0 {
            self.lots.entry(lot.asset.clone()).or_default().push(lot);
        }
    }

    pub fn lots(&self, asset: &str) -> &[Lot] {
        self.lots.get(asset).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn assets(&self) -> impl Iterator<Item = &str> {
        self.lots.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Lot> {
        self.lots.values().flatten()
    }

    /// Remaining base units of `asset`.
    pub fn remaining(&self, asset: &str) -> u128 {
        self.lots(asset).iter().map(|l| l.remaining_qty.base_units()).sum()
    }

    pub fn asset_basis(&self, asset: &str) -> Rational {
        self.lots(asset).iter().map(Lot::total_basis).sum()
    }

    pub fn total_basis(&self) -> Rational {
        self.iter().map(Lot::total_basis).sum()
    }

    /// Sets every lot of `asset` to `unit_basis`.
    pub fn rebase(&mut self, asset: &str, unit_basis: &Rational) {
        if let Some(lots) = self.lots.get_mut(asset) {
            for lot in lots {
                lot.unit_basis = unit_basis.clone();
            }
        }
    }

    /// Running average basis per whole unit, `None` with no holdings.
    pub fn average_basis(&self, asset: &str) -> Option<Rational> {
        let qty: Rational = self.lots(asset).iter().map(|l| l.remaining_qty.to_rational()).sum();
        if qty.is_zero() {
            None
        } else {
            Some(self.asset_basis(asset) / qty)
        }
    }

    fn order(&self, asset: &str, method: AccountingMethod, specid: &[u64]) -> Result<Vec<usize>, TaxError> {
        let lots = self.lots(asset);
        let mut idx: Vec<usize> = (0..lots.len()).collect();
        let fifo = |a: &usize, b: &usize| (lots[*a].acquired_at, lots[*a].lot_id).cmp(&(lots[*b].acquired_at, lots[*b].lot_id));
        match method {
            AccountingMethod::Lifo => idx.sort_by(|a, b| fifo(b, a)),
            AccountingMethod::Hifo => {
                idx.sort_by(|a, b| lots[*b].unit_basis.cmp(&lots[*a].unit_basis).then_with(|| fifo(a, b)))
            }
            AccountingMethod::SpecId => {
                if specid.is_empty() {
                    return Err(TaxError::MissingSpecId);
                }
                let mut seen = std::collections::BTreeSet::new();
                idx = specid
                    .iter()
                    .filter(|id| seen.insert(**id))
                    .map(|id| {
                        lots.iter()
                            .position(|l| l.lot_id == *id)
                            .ok_or(TaxError::UnknownLot { asset: asset.into(), lot_id: *id })
                    })
                    .collect::<Result<_, _>>()?;
            }
            _ => idx.sort_by(fifo),
        }
        Ok(idx)
    }

    /// Removes `qty` of `asset` and prices the basis per `method`.
    pub fn dispose(
        &mut self,
        asset: &str,
        qty: &Amount,
        unit_proceeds: &Rational,
        method: AccountingMethod,
        ctx: &DisposeContext,
    ) -> Result<DisposalResult, TaxError> {
        let proceeds = qty.to_rational() * unit_proceeds;
        if qty.base_units() == 0 {
            return Ok(DisposalResult { consumed: Vec::new(), proceeds, basis: Rational::zero(), gain: Rational::zero() });
        }
        let available = self.remaining(asset);
        if available < qty.base_units() {
            return Err(TaxError::InsufficientQuantity {
                asset: asset.into(),
                requested: qty.base_units(),
                available,
            });
        }
        if let Some(first) = self.lots(asset).first() {
            if first.remaining_qty.decimals() != qty.decimals() {
                return Err(crate::amount::AmountError::DecimalsMismatch(first.remaining_qty.decimals(), qty.decimals()).into());
            }
        }
        let portfolio_basis = self.total_basis();
        let pooled_basis = match method {
            AccountingMethod::AvgMoving => self.average_basis(asset),
            AccountingMethod::AvgTotal => ctx.average_basis.clone().or_else(|| self.average_basis(asset)),
            _ => None,
        };
        let order = self.order(asset, method, &ctx.specid)?;
        let covered: u128 = order.iter().map(|i| self.lots(asset)[*i].remaining_qty.base_units()).sum();
        if covered < qty.base_units() {
            return Err(TaxError::SpecIdShort { asset: asset.into(), missing: qty.base_units() - covered });
        }
        if method == AccountingMethod::Pvct && !ctx.portfolio_fmv.as_ref().is_some_and(|f| f.is_positive()) {
            return Err(TaxError::MissingPortfolioFmv);
        }

        let lots = self.lots.get_mut(asset).expect("asset has lots");
        let mut need = qty.base_units();
        let mut consumed = Vec::new();
        for i in order {
            if need == 0 {
                break;
            }
            let lot = &mut lots[i];
            let take = need.min(lot.remaining_qty.base_units());
            if take == 0 {
                continue;
            }
            let taken = Amount::new(take, qty.decimals());
            let unit = pooled_basis.as_ref().unwrap_or(&lot.unit_basis);
            consumed.push(ConsumedLot {
                lot_id: lot.lot_id,
                qty: taken,
                basis: taken.to_rational() * unit,
                acquired_at: lot.acquired_at,
            });
            lot.remaining_qty = Amount::new(lot.remaining_qty.base_units() - take, qty.decimals());
            need -= take;
        }
        debug_assert_eq!(need, 0);
        lots.retain(|l| l.remaining_qty.base_units() > 0);
        if let Some(avg) = &pooled_basis {
            for lot in lots.iter_mut() {
                lot.unit_basis = avg.clone();
            }
        }
        if method == AccountingMethod::Pvct {
            self.apply_pvct(asset, &proceeds, &portfolio_basis, ctx, &mut consumed)?;
        }
        if self.lots.get(asset).is_some_and(Vec::is_empty) {
            self.lots.remove(asset);
        }
        let basis: Rational = consumed.iter().map(|c| c.basis.clone()).sum();
        let gain = &proceeds - &basis;
        Ok(DisposalResult { consumed, proceeds, basis, gain })
    }

    /// Global-pool basis: `C × proceeds / portfolio_fmv`, spread over the
    /// consumed quantity, with every remaining lot rescaled so the pool keeps
    /// exactly `C` minus what was used.
    fn apply_pvct(
        &mut self,
        asset: &str,
        proceeds: &Rational,
        portfolio_basis: &Rational,
        ctx: &DisposeContext,
        consumed: &mut [ConsumedLot],
    ) -> Result<(), TaxError> {
        let fmv = ctx.portfolio_fmv.clone().ok_or(TaxError::MissingPortfolioFmv)?;
        let mut used = portfolio_basis * proceeds / fmv;
        if used > *portfolio_basis {
            used = portfolio_basis.clone();
        }
        let remaining_target = portfolio_basis - &used;
        let remaining_now = self.total_basis();
        if remaining_now.is_positive() {
            let factor = &remaining_target / &remaining_now;
            for lot in self.lots.values_mut().flatten() {
                lot.unit_basis = &lot.unit_basis * &factor;
            }
        } else if remaining_target.is_positive() {
            // Only zero-basis lots remain: spread the pool over this asset's
            // remaining units, or over every remaining unit if none are left.
            let holders: Vec<&mut Lot> = if self.remaining(asset) > 0 {
                self.lots.get_mut(asset).into_iter().flatten().collect()
            } else {
                self.lots.values_mut().flatten().collect()
            };
            let qty: Rational = holders.iter().map(|l| l.remaining_qty.to_rational()).sum();
            if qty.is_zero() {
                used = portfolio_basis.clone();
            } else {
                let unit = &remaining_target / qty;
                for lot in holders {
                    lot.unit_basis = unit.clone();
                }
            }
        }
        let total_qty = BigInt::from(consumed.iter().map(|c| c.qty.base_units()).sum::<u128>());
        for c in consumed.iter_mut() {
            c.basis = &used * Rational::new(BigInt::from(c.qty.base_units()), total_qty.clone());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::parse_rational;

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn store(lots: &[(u128, &str)]) -> LotStore {
        let mut s = LotStore::new();
        for (i, (units, basis)) in lots.iter().enumerate() {
            s.add(Lot {
                lot_id: i as u64 + 1,
                asset: "BTC".into(),
                remaining_qty: Amount::whole(*units, 8).unwrap(),
                unit_basis: q(basis),
                acquired_at: i as i64 * 10,
                source: EventKind::Purchase,
            });
        }
        s
    }

    fn gain(method: AccountingMethod) -> Rational {
        let mut s = store(&[(1, "100"), (1, "300"), (1, "200")]);
        let one = Amount::whole(1, 8).unwrap();
        s.dispose("BTC", &one, &q("250"), method, &DisposeContext::default()).unwrap().gain
    }

    #[test]
    fn fifo_lifo_hifo() {
        assert_eq!(gain(AccountingMethod::Fifo), q("150"));
        assert_eq!(gain(AccountingMethod::Lifo), q("50"));
        assert_eq!(gain(AccountingMethod::Hifo), q("-50"));
    }

    #[test]
    fn moving_average() {
        let mut s = store(&[(1, "100"), (1, "200")]);
        let one = Amount::whole(1, 8).unwrap();
        let r = s.dispose("BTC", &one, &q("300"), AccountingMethod::AvgMoving, &DisposeContext::default()).unwrap();
        assert_eq!(r.gain, q("150"));
        assert_eq!(s.lots("BTC")[0].unit_basis, q("150"));
    }

    #[test]
    fn pvct_fraction() {
        // Cost 1000 over 10 units; portfolio worth 4000; sell 1 unit for 400.
        let mut s = store(&[(10, "100")]);
        let ctx = DisposeContext { portfolio_fmv: Some(q("4000")), ..Default::default() };
        let one = Amount::whole(1, 8).unwrap();
        let r = s.dispose("BTC", &one, &q("400"), AccountingMethod::Pvct, &ctx).unwrap();
        assert_eq!(r.basis, q("100"));
        assert_eq!(r.gain, q("300"));
        assert_eq!(s.total_basis(), q("900"));
    }

    #[test]
    fn specid_and_errors() {
        let mut s = store(&[(1, "100"), (1, "300"), (1, "200")]);
        let one = Amount::whole(1, 8).unwrap();
        let ctx = DisposeContext { specid: vec![3], ..Default::default() };
        assert_eq!(s.dispose("BTC", &one, &q("250"), AccountingMethod::SpecId, &ctx).unwrap().gain, q("50"));
        assert!(matches!(
            s.dispose("BTC", &one, &q("1"), AccountingMethod::SpecId, &DisposeContext::default()),
            Err(TaxError::MissingSpecId)
        ));
        let ten = Amount::whole(10, 8).unwrap();
        assert!(matches!(
            s.dispose("BTC", &ten, &q("1"), AccountingMethod::Fifo, &DisposeContext::default()),
            Err(TaxError::InsufficientQuantity { .. })
        ));
        let two = Amount::whole(2, 8).unwrap();
        let short = DisposeContext { specid: vec![1], ..Default::default() };
        assert!(matches!(
            s.dispose("BTC", &two, &q("1"), AccountingMethod::SpecId, &short),
            Err(TaxError::SpecIdShort { .. })
        ));
    }
}
