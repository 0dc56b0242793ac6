//! Approximation algorithms for the general return-on-spend variant, where
//! buyer `j` needs `sum v_ij x_ij >= rho_j sum c_ij x_ij`.

use std::cmp::Ordering;

use num_traits::{One, Zero};

use crate::error::{AvaError, Result};
use crate::model::{Allocation, BuyerId, EdgeClass, Instance, ItemId};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuyerRatio {
    pub buyer: BuyerId,
    pub value: Rational,
    /// `rho_j * sum of allocated costs`
    pub spend: Rational,
}

impl BuyerRatio {
    /// `spend / value`, or `None` for a buyer with nothing allocated.
    pub fn ratio(&self) -> Option<Rational> {
        (!self.value.is_zero()).then(|| self.spend / self.value)
    }
}

#[derive(Clone, Debug)]
pub struct BicriteriaOutcome {
    pub allocation: Allocation,
    pub per_buyer: Vec<BuyerRatio>,
}

impl BicriteriaOutcome {
    pub fn value(&self) -> Rational {
        self.per_buyer.iter().map(|b| b.value).sum()
    }

    /// Largest spend/value ratio over buyers that received something.
    pub fn worst_ratio(&self) -> Option<Rational> {
        self.per_buyer.iter().filter_map(BuyerRatio::ratio).max()
    }
}

/// `1 / (1 - eps)`: the spend/value ratio the greedy rule can reach.
pub fn bicriteria_bound(eps: Rational) -> Rational {
    Rational::one() / (Rational::one() - eps)
}

/// Gives each item to its highest-value buyer among those with
/// `v_ij >= rho_j c_ij (1 - eps)`; earlier buyers win ties.
pub fn genava_bicriteria_greedy(inst: &Instance, eps: Rational) -> Result<BicriteriaOutcome> {
    if eps <= Rational::zero() || eps >= Rational::one() {
        return Err(AvaError::BadEps(format!("need 0 < eps < 1, got {eps}")));
    }
    let mut allocation = Allocation::new();
    let mut per_buyer: Vec<BuyerRatio> =
        inst.buyer_ids().map(|buyer| BuyerRatio { buyer, value: Rational::zero(), spend: Rational::zero() }).collect();
    let keep = Rational::one() - eps;
    for i in inst.items() {
        let mut best: Option<(BuyerId, Rational, Rational)> = None;
        for e in inst.edges(i) {
            let spend = inst.rho(e.buyer) * e.cost;
            if e.value >= spend * keep && best.as_ref().is_none_or(|b| e.value > b.1) {
                best = Some((e.buyer, e.value, spend));
            }
        }
        if let Some((j, v, s)) = best {
            allocation.assign(i, j);
            per_buyer[j.0].value += v;
            per_buyer[j.0].spend += s;
        }
    }
    Ok(BicriteriaOutcome { allocation, per_buyer })
}

/// Best single buyer: all of its P-edges plus a knapsack of N-edges whose
/// deficits fit in the P-edges' total excess.
pub fn genava_single_buyer(inst: &Instance) -> Allocation {
    let mut best: Option<(Rational, Vec<ItemId>, BuyerId)> = None;
    for j in inst.buyer_ids() {
        let mut items = Vec::new();
        let mut value = Rational::zero();
        let mut capacity = Rational::zero();
        let mut knap = Vec::new();
        for i in inst.items() {
            let Some(e) = inst.edge(i, j) else { continue };
            let ex = inst.excess(i, j).expect("edge");
            match inst.class(i, j).expect("edge") {
                EdgeClass::P => {
                    items.push(i);
                    value += e.value;
                    capacity += ex;
                }
                EdgeClass::N => knap.push((i, e.value, -ex)),
            }
        }
        let (kv, chosen) = knapsack_half(&knap, capacity);
        items.extend(chosen);
        value += kv;
        if best.as_ref().is_none_or(|b| value > b.0) {
            best = Some((value, items, j));
        }
    }
    best.map(|(_, items, j)| items.into_iter().map(|i| (i, j)).collect()).unwrap_or_default()
}

/// Better of density-ordered greedy (skipping items that do not fit) and
/// the best single fitting item; at least half the knapsack optimum.
pub fn knapsack_half(items: &[(ItemId, Rational, Rational)], capacity: Rational) -> (Rational, Vec<ItemId>) {
    let mut order: Vec<usize> = (0..items.len()).collect();
    let density_cmp = |a: &usize, b: &usize| {
        let (_, va, wa) = items[*a];
        let (_, vb, wb) = items[*b];
        // va/wa > vb/wb, with zero weight treated as infinite density
        (vb * wa).cmp(&(va * wb)).then(a.cmp(b))
    };
    order.sort_by(density_cmp);
    let mut room = capacity;
    let mut greedy = Vec::new();
    let mut gv = Rational::zero();
    for k in order {
        let (i, v, w) = items[k];
        if w <= room {
            room -= w;
            gv += v;
            greedy.push(i);
        }
    }
    let single = items.iter().filter(|(_, _, w)| *w <= capacity).max_by(|a, b| a.1.cmp(&b.1).then(Ordering::Greater));
    match single {
        Some(&(i, v, _)) if v > gv => (v, vec![i]),
        _ => {
            greedy.sort_unstable();
            (gv, greedy)
        }
    }
}
