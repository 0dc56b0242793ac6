//! Exhaustive oracles for small instances.
//!
//! Items are enumerated in declaration order, buyers inner (edge order), with
//! "unassigned" tried last. Branches are cut when the remaining maximum
//! values cannot beat the incumbent, when some buyer's deficit can no longer
//! be covered by the positive excess still available, or when a budget is
//! exceeded. Only strict improvements replace the incumbent, so ties keep
//! the first solution in enumeration order.
//!
//! All arithmetic is exact: data is scaled to integers by the least common
//! multiple of its denominators.

use std::collections::BTreeSet;

use num_integer::Integer;
use num_traits::Zero;

use crate::bundling::{Bundle, BundledAllocation};
use crate::error::{AvaError, Result};
use crate::gap::{GapInstance, GapSolution};
use crate::model::{Allocation, BuyerId, EdgeClass, Instance, ItemId};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_states: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 10_000_000 }
    }
}

/// Size of the assignment space: `prod_i (deg_i + 1)`.
pub fn state_count(inst: &Instance) -> u128 {
    inst.items().fold(1u128, |acc, i| acc.saturating_mul(inst.edges(i).len() as u128 + 1))
}

fn check_size(inst: &Instance, limits: &Limits) -> Result<()> {
    let states = state_count(inst);
    if states > limits.max_states {
        return Err(AvaError::TooLarge { states, limit: limits.max_states });
    }
    Ok(())
}

fn lcm_of<'a>(values: impl Iterator<Item = &'a Rational>) -> Result<i128> {
    let mut l: i128 = 1;
    for v in values {
        let d = *v.denom();
        l = l
            .checked_div(l.gcd(&d))
            .and_then(|x| x.checked_mul(d))
            .ok_or_else(|| AvaError::NumericalFailure("denominators overflow".into()))?;
    }
    Ok(l)
}

fn scale(v: &Rational, l: i128) -> Result<i128> {
    v.numer().checked_mul(l / v.denom()).ok_or_else(|| AvaError::NumericalFailure("scaled value overflows".into()))
}

/// Integer-scaled copy of the data the searches need.
struct Scaled {
    /// Per item: (buyer, value, excess, class) in edge order.
    edges: Vec<Vec<(BuyerId, i128, i128, EdgeClass)>>,
    /// `[resource][item][edge index]` scaled costs and `[resource][buyer]` budgets.
    res_cost: Vec<Vec<Vec<i128>>>,
    budget: Vec<Vec<Option<i128>>>,
    value_scale: i128,
    /// Suffix sums (from item k on) of max value and of positive excess per buyer.
    max_value_suffix: Vec<i128>,
    pos_excess_suffix: Vec<Vec<i128>>,
}

impl Scaled {
    fn new(inst: &Instance) -> Result<Scaled> {
        let mut vals = Vec::new();
        let mut exs = Vec::new();
        for i in inst.items() {
            for e in inst.edges(i) {
                vals.push(e.value);
                exs.push(inst.excess(i, e.buyer).expect("edge"));
            }
        }
        let value_scale = lcm_of(vals.iter().chain(exs.iter()))?;
        let mut edges = Vec::new();
        for i in inst.items() {
            let mut es = Vec::new();
            for e in inst.edges(i) {
                let ex = inst.excess(i, e.buyer).expect("edge");
                let class = if ex >= Rational::zero() { EdgeClass::P } else { EdgeClass::N };
                es.push((e.buyer, scale(&e.value, value_scale)?, scale(&ex, value_scale)?, class));
            }
            edges.push(es);
        }
        let mut res_cost = Vec::new();
        let mut budget = Vec::new();
        for r in inst.resources() {
            let all: Vec<Rational> = inst
                .items()
                .flat_map(|i| inst.edges(i).iter().map(move |e| r.cost(i, e.buyer)))
                .chain(r.budgets.iter().flatten().copied())
                .collect();
            let l = lcm_of(all.iter())?;
            let costs = inst
                .items()
                .map(|i| inst.edges(i).iter().map(|e| scale(&r.cost(i, e.buyer), l)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            res_cost.push(costs);
            budget.push(
                r.budgets.iter().map(|b| b.as_ref().map(|b| scale(b, l)).transpose()).collect::<Result<Vec<_>>>()?,
            );
        }
        let n = inst.n_items();
        let mut max_value_suffix = vec![0i128; n + 1];
        let mut pos_excess_suffix = vec![vec![0i128; inst.n_buyers()]; n + 1];
        for k in (0..n).rev() {
            let best = edges[k].iter().map(|e| e.1).max().unwrap_or(0);
            max_value_suffix[k] = max_value_suffix[k + 1] + best;
            pos_excess_suffix[k] = pos_excess_suffix[k + 1].clone();
            for &(j, _, ex, _) in &edges[k] {
                if ex > 0 {
                    pos_excess_suffix[k][j.0] += ex;
                }
            }
        }
        Ok(Scaled { edges, res_cost, budget, value_scale, max_value_suffix, pos_excess_suffix })
    }

    fn unscale(&self, v: i128) -> Rational {
        Rational::new(v, self.value_scale)
    }
}

/// Roles an item can take in the bundling search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Skip,
    Assigned(usize),
}

struct Search<'a> {
    s: &'a Scaled,
    excess: Vec<i128>,
    spent: Vec<Vec<i128>>,
    choice: Vec<Role>,
    value: i128,
    best_value: i128,
    best: Option<Vec<Role>>,
    /// Leaf acceptance test beyond the per-buyer excess check.
    accept: &'a dyn Fn(&[Role]) -> bool,
}

impl Search<'_> {
    fn run(&mut self, k: usize) {
        let n = self.s.edges.len();
        if self.best.is_some() && self.value + self.s.max_value_suffix[k] <= self.best_value {
            return;
        }
        if self.excess.iter().zip(&self.s.pos_excess_suffix[k]).any(|(e, p)| e + p < 0) {
            return;
        }
        if k == n {
            if (self.best.is_none() || self.value > self.best_value) && (self.accept)(&self.choice) {
                self.best_value = self.value;
                self.best = Some(self.choice.clone());
            }
            return;
        }
        for (idx, &(j, v, ex, _)) in self.s.edges[k].iter().enumerate() {
            let mut ok = true;
            for (r, costs) in self.s.res_cost.iter().enumerate() {
                let c = costs[k][idx];
                self.spent[r][j.0] += c;
                if let Some(b) = self.s.budget[r][j.0] {
                    if self.spent[r][j.0] > b {
                        ok = false;
                    }
                }
            }
            if ok {
                self.excess[j.0] += ex;
                self.value += v;
                self.choice[k] = Role::Assigned(idx);
                self.run(k + 1);
                self.excess[j.0] -= ex;
                self.value -= v;
            }
            for (r, costs) in self.s.res_cost.iter().enumerate() {
                self.spent[r][j.0] -= costs[k][idx];
            }
        }
        self.choice[k] = Role::Skip;
        self.run(k + 1);
    }
}

fn search(inst: &Instance, s: &Scaled, accept: &dyn Fn(&[Role]) -> bool) -> Option<(i128, Vec<Role>)> {
    let mut st = Search {
        s,
        excess: vec![0; inst.n_buyers()],
        spent: vec![vec![0; inst.n_buyers()]; inst.resources().len()],
        choice: vec![Role::Skip; inst.n_items()],
        value: 0,
        best_value: 0,
        best: None,
        accept,
    };
    st.run(0);
    st.best.map(|b| (st.best_value, b))
}

/// Optimal feasible allocation (average-value constraints with costs, and
/// budgets when present).
pub fn exact_opt(inst: &Instance, limits: &Limits) -> Result<(Rational, Allocation)> {
    check_size(inst, limits)?;
    let s = Scaled::new(inst)?;
    let accept = |_: &[Role]| true;
    let (value, roles) = search(inst, &s, &accept).expect("empty allocation is feasible");
    let alloc = roles
        .iter()
        .enumerate()
        .filter_map(|(k, r)| match r {
            Role::Assigned(idx) => Some((ItemId(k), s.edges[k][*idx].0)),
            Role::Skip => None,
        })
        .collect();
    Ok((s.unscale(value), alloc))
}

/// Packs member deficits into head residuals; returns the bin of each member.
fn pack(residuals: &[i128], deficits: &[(usize, i128)]) -> Option<Vec<usize>> {
    let mut order: Vec<usize> = (0..deficits.len()).collect();
    order.sort_by_key(|&k| std::cmp::Reverse(deficits[k].1));
    let mut room = residuals.to_vec();
    let mut place = vec![usize::MAX; deficits.len()];
    fn go(pos: usize, order: &[usize], deficits: &[(usize, i128)], room: &mut [i128], place: &mut [usize]) -> bool {
        let Some(&k) = order.get(pos) else { return true };
        let d = deficits[k].1;
        let mut tried = BTreeSet::new();
        for b in 0..room.len() {
            if room[b] >= d && tried.insert(room[b]) {
                room[b] -= d;
                place[k] = b;
                if go(pos + 1, order, deficits, room, place) {
                    return true;
                }
                room[b] += d;
            }
        }
        false
    }
    go(0, &order, deficits, &mut room, &mut place).then_some(place)
}

/// Heads and members per buyer for a role vector.
fn split_roles(s: &Scaled, n_buyers: usize, roles: &[Role]) -> Vec<(Vec<(usize, i128)>, Vec<(usize, i128)>)> {
    let mut per = vec![(Vec::new(), Vec::new()); n_buyers];
    for (k, r) in roles.iter().enumerate() {
        if let Role::Assigned(idx) = r {
            let (j, _, ex, class) = s.edges[k][*idx];
            match class {
                EdgeClass::P => per[j.0].0.push((k, ex)),
                EdgeClass::N => per[j.0].1.push((k, -ex)),
            }
        }
    }
    per
}

/// Optimal bundling: every assigned P-edge heads its own bundle and the
/// N-edges of each buyer must pack into the residual excess of its heads.
pub fn exact_bundling_opt(inst: &Instance, limits: &Limits) -> Result<(Rational, BundledAllocation)> {
    check_size(inst, limits)?;
    let s = Scaled::new(inst)?;
    let nb = inst.n_buyers();
    let accept = |roles: &[Role]| {
        split_roles(&s, nb, roles).iter().all(|(heads, members)| {
            let res: Vec<i128> = heads.iter().map(|h| h.1).collect();
            pack(&res, members).is_some()
        })
    };
    let (value, roles) = search(inst, &s, &accept).expect("empty bundling is feasible");
    let mut bundles = Vec::new();
    for (j, (heads, members)) in split_roles(&s, nb, &roles).into_iter().enumerate() {
        let res: Vec<i128> = heads.iter().map(|h| h.1).collect();
        let place = pack(&res, &members).expect("accepted");
        for (b, &(p, _)) in heads.iter().enumerate() {
            let n_items = members.iter().zip(&place).filter(|(_, &pl)| pl == b).map(|((m, _), _)| ItemId(*m)).collect();
            bundles.push(Bundle { buyer: BuyerId(j), p_item: ItemId(p), n_items });
        }
    }
    bundles.sort_by_key(|b| b.p_item);
    Ok((s.unscale(value), BundledAllocation::new(bundles)))
}

/// Maximum-value feasible GAP solution: at most one open bin per group,
/// each element in at most one open bin, bin loads at most 1.
pub fn exact_gap_opt(gap: &GapInstance) -> Result<(Rational, GapSolution)> {
    let ne = gap.elements.len();
    let nb = gap.bins.len();
    if ne > 10 || nb > 12 {
        let states = (nb as u128 + 1).saturating_pow(ne as u32);
        return Err(AvaError::TooLarge { states, limit: 11u128.pow(10) });
    }
    let mut best: Option<(Rational, GapSolution)> = None;
    let groups = gap.groups();
    let mut open = vec![None; groups.len()];
    fn choose_bins(
        g: usize,
        groups: &[Vec<usize>],
        open: &mut Vec<Option<usize>>,
        gap: &GapInstance,
        best: &mut Option<(Rational, GapSolution)>,
    ) {
        if g == groups.len() {
            let bins: Vec<usize> = open.iter().flatten().copied().collect();
            let mut load = vec![Rational::zero(); gap.bins.len()];
            let mut assign = vec![None; gap.elements.len()];
            place(0, &bins, gap, &mut load, &mut assign, Rational::zero(), best);
            return;
        }
        for choice in groups[g].iter().map(|&b| Some(b)).chain(std::iter::once(None)) {
            open[g] = choice;
            choose_bins(g + 1, groups, open, gap, best);
        }
        open[g] = None;
    }
    fn place(
        e: usize,
        bins: &[usize],
        gap: &GapInstance,
        load: &mut Vec<Rational>,
        assign: &mut Vec<Option<usize>>,
        value: Rational,
        best: &mut Option<(Rational, GapSolution)>,
    ) {
        if e == gap.elements.len() {
            if best.as_ref().is_none_or(|(v, _)| value > *v) {
                let sol = GapSolution {
                    open: bins.to_vec(),
                    assignment: assign.iter().enumerate().filter_map(|(e, b)| b.map(|b| (e, b))).collect(),
                };
                *best = Some((value, sol));
            }
            return;
        }
        for &b in bins {
            if let Some(entry) = gap.entry(e, b) {
                let new_load = load[b] + entry.size;
                if new_load <= Rational::from_integer(1) {
                    let old = std::mem::replace(&mut load[b], new_load);
                    assign[e] = Some(b);
                    place(e + 1, bins, gap, load, assign, value + entry.value, best);
                    assign[e] = None;
                    load[b] = old;
                }
            }
        }
        place(e + 1, bins, gap, load, assign, value, best);
    }
    choose_bins(0, &groups, &mut open, gap, &mut best);
    Ok(best.expect("empty solution exists"))
}
