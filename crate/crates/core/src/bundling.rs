//! Permissible bundles: one P-edge plus N-edges of the same buyer whose
//! total excess is non-negative.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use rand::Rng;

use crate::error::{AvaError, Result};
use crate::model::{Allocation, BuyerId, EdgeClass, Instance, ItemId, ItemKind};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Bundle {
    pub buyer: BuyerId,
    pub p_item: ItemId,
    pub n_items: BTreeSet<ItemId>,
}

impl Bundle {
    pub fn singleton(buyer: BuyerId, p_item: ItemId) -> Bundle {
        Bundle { buyer, p_item, n_items: BTreeSet::new() }
    }

    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        std::iter::once(self.p_item).chain(self.n_items.iter().copied())
    }

    pub fn value(&self, inst: &Instance) -> Rational {
        self.items().map(|i| inst.value(i, self.buyer)).sum()
    }

    /// Sum of edge excesses; the bundle is permissible iff this is non-negative.
    pub fn residual(&self, inst: &Instance) -> Rational {
        self.items().map(|i| inst.excess(i, self.buyer).unwrap_or_else(Rational::zero)).sum()
    }

    /// Checks the structural rules and permissibility.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        let bad = |msg: String| Err(AvaError::InvalidBundling(msg));
        match inst.class(self.p_item, self.buyer) {
            Some(EdgeClass::P) => {}
            _ => {
                return bad(format!(
                    "head {} is not a P-edge of {}",
                    inst.item_name(self.p_item),
                    inst.buyer(self.buyer).name
                ))
            }
        }
        for &n in &self.n_items {
            if n == self.p_item {
                return bad(format!("{} is both head and member", inst.item_name(n)));
            }
            if inst.class(n, self.buyer) != Some(EdgeClass::N) {
                return bad(format!(
                    "member {} is not an N-edge of {}",
                    inst.item_name(n),
                    inst.buyer(self.buyer).name
                ));
            }
        }
        if self.residual(inst) < Rational::zero() {
            return bad(format!("bundle headed by {} is not permissible", inst.item_name(self.p_item)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BundledAllocation {
    pub bundles: Vec<Bundle>,
}

impl BundledAllocation {
    pub fn new(bundles: Vec<Bundle>) -> Self {
        BundledAllocation { bundles }
    }

    pub fn value(&self, inst: &Instance) -> Rational {
        self.bundles.iter().map(|b| b.value(inst)).sum()
    }

    pub fn to_allocation(&self) -> Allocation {
        self.bundles.iter().flat_map(|b| b.items().map(move |i| (i, b.buyer))).collect()
    }

    /// Every bundle valid and no item used twice.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        let mut seen = BTreeSet::new();
        for b in &self.bundles {
            b.validate(inst)?;
            for i in b.items() {
                if !seen.insert(i) {
                    return Err(AvaError::InvalidBundling(format!("{} used twice", inst.item_name(i))));
                }
            }
        }
        Ok(())
    }

    /// Bundles in a canonical order, for comparisons.
    pub fn normalized(&self) -> BundledAllocation {
        let mut bundles = self.bundles.clone();
        bundles.sort();
        BundledAllocation { bundles }
    }
}

/// Converts an allocation that stays feasible along `arrival_order` into a
/// committed bundling of at least half its value.
///
/// P-edges open bundles. An N-edge joins the open bundle of its buyer with
/// the largest residual that can absorb it; if none can, the open bundle with
/// the smallest residual is closed and the N-edge is dropped.
pub fn extract_bundling(inst: &Instance, alloc: &Allocation, arrival_order: &[ItemId]) -> Result<BundledAllocation> {
    let mut seen = BTreeSet::new();
    for &i in arrival_order {
        if !seen.insert(i) {
            return Err(AvaError::Validation(format!("{} arrives twice", inst.item_name(i))));
        }
    }
    for (i, _) in alloc.iter() {
        if !seen.contains(&i) {
            return Err(AvaError::Validation(format!("{} missing from the arrival order", inst.item_name(i))));
        }
    }
    let mut prefix = vec![Rational::zero(); inst.n_buyers()];
    for (pos, &i) in arrival_order.iter().enumerate() {
        if let Some(j) = alloc.get(i) {
            let ex = inst.excess(i, j).ok_or_else(|| AvaError::UnknownEdge {
                item: inst.item_name(i).to_string(),
                buyer: inst.buyer(j).name.clone(),
            })?;
            prefix[j.0] += ex;
            if prefix[j.0] < Rational::zero() {
                return Err(AvaError::InfeasiblePrefix { buyer: inst.buyer(j).name.clone(), position: pos });
            }
        }
    }

    let mut bundles: Vec<(Bundle, Rational, bool)> = Vec::new();
    for &i in arrival_order {
        let Some(j) = alloc.get(i) else { continue };
        let ex = inst.excess(i, j).expect("checked above");
        if ex >= Rational::zero() {
            bundles.push((Bundle::singleton(j, i), ex, true));
            continue;
        }
        let open = || bundles.iter().enumerate().filter(|(_, (b, _, o))| *o && b.buyer == j);
        let admit = open()
            .filter(|(_, (_, r, _))| *r + ex >= Rational::zero())
            .max_by(|a, b| a.1 .1.cmp(&b.1 .1).then(b.0.cmp(&a.0)))
            .map(|(k, _)| k);
        if let Some(k) = admit {
            bundles[k].0.n_items.insert(i);
            bundles[k].1 += ex;
        } else if let Some(k) = open().min_by(|a, b| a.1 .1.cmp(&b.1 .1).then(a.0.cmp(&b.0))).map(|(k, _)| k) {
            bundles[k].2 = false;
        }
    }
    Ok(BundledAllocation { bundles: bundles.into_iter().map(|(b, _, _)| b).collect() })
}

/// Drops all P-edges or all N-edges of every ambiguous item, each with
/// probability one half. Items that are already P-items or N-items are kept
/// intact and consume no randomness.
pub fn make_unambiguous_random<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Instance {
    let keep_p: Vec<Option<bool>> =
        inst.items().map(|i| (inst.item_kind(i) == ItemKind::Ambiguous).then(|| rng.gen_bool(0.5))).collect();
    inst.filter_edges(|i, e| match keep_p[i.0] {
        None => true,
        Some(keep_p) => {
            let is_p = inst.class(i, e.buyer) == Some(EdgeClass::P);
            is_p == keep_p
        }
    })
}

/// Which part of an original item a split item stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitPart {
    Whole,
    Positive,
    Negative,
}

/// The instance with every ambiguous item split into a positive copy (its
/// P-edges) and a negative copy (its N-edges).
#[derive(Clone, Debug)]
pub struct SplitInstance {
    pub instance: Instance,
    /// Original item and copy kind of each split item.
    pub origin: Vec<(ItemId, SplitPart)>,
}

pub fn split_ambiguous(inst: &Instance) -> SplitInstance {
    let mut b = crate::model::InstanceBuilder::new();
    for buyer in inst.buyers() {
        b.add_buyer(buyer.name.clone(), buyer.rho);
    }
    let res: Vec<usize> = inst.resources().iter().map(|r| b.add_resource(r.name.clone())).collect();
    for (r, resource) in inst.resources().iter().enumerate() {
        for j in inst.buyer_ids() {
            if let Some(budget) = resource.budget(j) {
                b.set_budget(res[r], j, *budget);
            }
        }
    }
    let mut origin = Vec::new();
    for i in inst.items() {
        let parts: Vec<(String, SplitPart, Option<EdgeClass>)> = if inst.item_kind(i) == ItemKind::Ambiguous {
            vec![
                (format!("{}+", inst.item_name(i)), SplitPart::Positive, Some(EdgeClass::P)),
                (format!("{}-", inst.item_name(i)), SplitPart::Negative, Some(EdgeClass::N)),
            ]
        } else {
            vec![(inst.item_name(i).to_string(), SplitPart::Whole, None)]
        };
        for (name, copy, class) in parts {
            let k = b.add_item(name);
            origin.push((i, copy));
            for e in inst.edges(i) {
                if class.is_some() && inst.class(i, e.buyer) != class {
                    continue;
                }
                b.set_value(k, e.buyer, e.value);
                if inst.is_genava() {
                    b.set_cost(k, e.buyer, e.cost);
                }
                for (r, resource) in inst.resources().iter().enumerate() {
                    if let Some(c) = resource.costs[i.0].get(&e.buyer) {
                        b.set_resource_cost(res[r], k, e.buyer, *c);
                    }
                }
            }
        }
    }
    for n in inst.notes() {
        b.note(n.clone());
    }
    SplitInstance { instance: b.build().expect("split of a valid instance is valid"), origin }
}

/// Converts a bundling of the split instance into a bundling of an
/// unambiguous sub-instance of `inst` keeping at least half the value.
///
/// An item whose positive copy heads bundle `a` while its negative copy sits
/// in bundle `b` yields an arc `a -> b`. Arcs on cycles are removed by
/// deleting the negative copies. The remaining in-trees keep either their
/// odd or their even levels; the root only ever loses the members that are
/// arc targets.
pub fn make_unambiguous_deterministic(
    inst: &Instance,
    bundling: &BundledAllocation,
) -> Result<(Instance, BundledAllocation)> {
    let split = split_ambiguous(inst);
    bundling.validate(&split.instance)?;
    let nb = bundling.bundles.len();

    let mut head_of: BTreeMap<ItemId, usize> = BTreeMap::new();
    let mut member_of: BTreeMap<ItemId, (usize, ItemId)> = BTreeMap::new();
    for (k, b) in bundling.bundles.iter().enumerate() {
        let (orig, copy) = split.origin[b.p_item.0];
        if copy == SplitPart::Negative {
            return Err(AvaError::InvalidBundling("negative copy used as a head".into()));
        }
        head_of.insert(orig, k);
        for &n in &b.n_items {
            let (orig, copy) = split.origin[n.0];
            if copy == SplitPart::Positive {
                return Err(AvaError::InvalidBundling("positive copy used as a member".into()));
            }
            member_of.insert(orig, (k, n));
        }
    }

    // out[a] = (b, split id of the negative copy in b)
    let mut out: Vec<Option<(usize, ItemId)>> = vec![None; nb];
    for (orig, &a) in &head_of {
        if let Some(&(b, n)) = member_of.get(orig) {
            if a == b {
                return Err(AvaError::InvalidBundling(format!(
                    "{} is head and member of one bundle",
                    inst.item_name(*orig)
                )));
            }
            out[a] = Some((b, n));
        }
    }

    let mut bundles: Vec<Bundle> = bundling.bundles.clone();

    // Cycles of the functional graph.
    let mut state = vec![0u8; nb];
    for start in 0..nb {
        let mut path = Vec::new();
        let mut v = start;
        while state[v] == 0 {
            state[v] = 1;
            path.push(v);
            match out[v] {
                Some((w, _)) => v = w,
                None => break,
            }
        }
        if state[v] == 1 && out[v].is_some() && path.contains(&v) {
            let pos = path.iter().position(|&u| u == v).expect("on path");
            for &u in &path[pos..] {
                let (w, n) = out[u].take().expect("cycle arc");
                bundles[w].n_items.remove(&n);
            }
        }
        for u in path {
            state[u] = 2;
        }
    }

    // Levels along the remaining in-trees.
    let mut root = vec![usize::MAX; nb];
    let mut level = vec![usize::MAX; nb];
    for v in 0..nb {
        let mut chain = vec![v];
        let mut u = v;
        while level[u] == usize::MAX {
            match out[u] {
                Some((w, _)) => {
                    u = w;
                    chain.push(u);
                }
                None => {
                    level[u] = 0;
                    root[u] = u;
                }
            }
        }
        let (base, r) = (level[u], root[u]);
        for (d, &w) in chain.iter().rev().enumerate() {
            if level[w] == usize::MAX {
                level[w] = base + d;
                root[w] = r;
            }
        }
    }

    let mut odd = vec![Rational::zero(); nb];
    let mut even = vec![Rational::zero(); nb];
    let mut root_targets: Vec<BTreeSet<ItemId>> = vec![BTreeSet::new(); nb];
    for v in 0..nb {
        if let Some((w, n)) = out[v] {
            if level[w] == 0 {
                root_targets[w].insert(n);
            }
        }
    }
    for v in 0..nb {
        let r = root[v];
        if level[v] == 0 {
            let b = &bundles[v];
            even[r] += root_targets[v].iter().map(|&n| split.instance.value(n, b.buyer)).sum::<Rational>();
        } else if level[v] % 2 == 0 {
            even[r] += bundles[v].value(&split.instance);
        } else {
            odd[r] += bundles[v].value(&split.instance);
        }
    }

    let mut kept: Vec<Bundle> = Vec::new();
    for v in 0..nb {
        let r = root[v];
        let keep_even = even[r] >= odd[r];
        let mut b = bundles[v].clone();
        if level[v] == 0 {
            if !keep_even {
                for n in &root_targets[v] {
                    b.n_items.remove(n);
                }
            }
        } else if (level[v] % 2 == 0) != keep_even {
            continue;
        }
        kept.push(b);
    }

    // Map back to original item ids and shrink the instance accordingly.
    let mut used_as: BTreeMap<ItemId, EdgeClass> = BTreeMap::new();
    let result = BundledAllocation {
        bundles: kept
            .iter()
            .map(|b| {
                let p = split.origin[b.p_item.0].0;
                used_as.insert(p, EdgeClass::P);
                let n_items = b
                    .n_items
                    .iter()
                    .map(|n| {
                        let o = split.origin[n.0].0;
                        used_as.insert(o, EdgeClass::N);
                        o
                    })
                    .collect();
                Bundle { buyer: b.buyer, p_item: p, n_items }
            })
            .collect(),
    };
    let sub = inst.filter_edges(|i, e| match inst.item_kind(i) {
        ItemKind::Ambiguous => {
            let want = used_as.get(&i).copied().unwrap_or(EdgeClass::P);
            inst.class(i, e.buyer) == Some(want)
        }
        _ => true,
    });
    result.validate(&sub)?;
    Ok((sub, result))
}

/// Replaces every item by `k` identical copies; buyers are unchanged.
pub fn duplicate_supply(inst: &Instance, k: usize) -> Result<Instance> {
    if k == 0 {
        return Err(AvaError::Validation("k must be at least 1".into()));
    }
    if k == 1 {
        return Ok(inst.clone());
    }
    let mut b = crate::model::InstanceBuilder::new();
    for buyer in inst.buyers() {
        b.add_buyer(buyer.name.clone(), buyer.rho);
    }
    let res: Vec<usize> = inst.resources().iter().map(|r| b.add_resource(r.name.clone())).collect();
    for (r, resource) in inst.resources().iter().enumerate() {
        for j in inst.buyer_ids() {
            if let Some(budget) = resource.budget(j) {
                b.set_budget(res[r], j, *budget);
            }
        }
    }
    for i in inst.items() {
        for c in 1..=k {
            let copy = b.add_item(format!("{}#{c}", inst.item_name(i)));
            for e in inst.edges(i) {
                b.set_value(copy, e.buyer, e.value);
                if inst.is_genava() {
                    b.set_cost(copy, e.buyer, e.cost);
                }
            }
            for (r, resource) in inst.resources().iter().enumerate() {
                for (j, cost) in &resource.costs[i.0] {
                    b.set_resource_cost(res[r], copy, *j, *cost);
                }
            }
        }
    }
    for n in inst.notes() {
        b.note(n.clone());
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{allocation_value, is_feasible, InstanceBuilder};
    use crate::rational::{int, q};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_buyer(values: &[Rational]) -> (Instance, Vec<ItemId>) {
        let mut b = InstanceBuilder::new();
        let j = b.add_buyer("b", int(1));
        let ids = values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let i = b.add_item(format!("i{k}"));
                b.set_value(i, j, *v);
                i
            })
            .collect();
        (b.build().unwrap(), ids)
    }

    #[test]
    fn p_then_n_forms_one_bundle() {
        let (inst, ids) = one_buyer(&[q(3, 2), q(6, 10)]);
        let alloc: Allocation = ids.iter().map(|&i| (i, BuyerId(0))).collect();
        let out = extract_bundling(&inst, &alloc, &ids).unwrap();
        assert_eq!(out.bundles.len(), 1);
        assert_eq!(out.value(&inst), q(21, 10));
        out.validate(&inst).unwrap();
    }

    #[test]
    fn p_edges_only_are_kept_as_singletons() {
        let (inst, ids) = one_buyer(&[q(3, 2), int(2), int(1)]);
        let alloc: Allocation = ids.iter().map(|&i| (i, BuyerId(0))).collect();
        let out = extract_bundling(&inst, &alloc, &ids).unwrap();
        assert_eq!(out.bundles.len(), 3);
        assert_eq!(out.to_allocation(), alloc);
    }

    #[test]
    fn infeasible_prefix_is_reported() {
        let (inst, ids) = one_buyer(&[q(3, 2), q(6, 10)]);
        let alloc: Allocation = ids.iter().map(|&i| (i, BuyerId(0))).collect();
        let order = vec![ids[1], ids[0]];
        assert!(matches!(extract_bundling(&inst, &alloc, &order), Err(AvaError::InfeasiblePrefix { position: 0, .. })));
    }

    #[test]
    fn tightness_instance_keeps_only_p_edges() {
        // 2 N-items at 0.5 and 4 P-items at 1.25
        let (inst, ids) = one_buyer(&[q(5, 4), q(5, 4), q(5, 4), q(5, 4), q(1, 2), q(1, 2)]);
        let alloc: Allocation = ids.iter().map(|&i| (i, BuyerId(0))).collect();
        assert!(is_feasible(&inst, &alloc).unwrap().is_feasible());
        assert_eq!(allocation_value(&inst, &alloc).unwrap(), int(6));
        let out = extract_bundling(&inst, &alloc, &ids).unwrap();
        assert_eq!(out.value(&inst), int(5));
    }

    #[test]
    fn random_unambiguation_keeps_one_side() {
        let mut b = InstanceBuilder::new();
        let j0 = b.add_buyer("a", int(1));
        let j1 = b.add_buyer("b", int(1));
        let m = b.add_item("m");
        let p = b.add_item("p");
        b.set_value(m, j0, q(13, 10)).set_value(m, j1, q(9, 10));
        b.set_value(p, j0, int(2));
        let inst = b.build().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut kept_p = 0;
        for _ in 0..200 {
            let out = make_unambiguous_random(&inst, &mut rng);
            assert!(out.is_unambiguous());
            assert_eq!(out.edges(p).len(), 1);
            assert_eq!(out.edges(m).len(), 1);
            if out.has_edge(m, j0) {
                kept_p += 1;
            }
        }
        assert!(kept_p > 60 && kept_p < 140);
    }

    #[test]
    fn duplicate_supply_copies_items() {
        let (inst, _) = one_buyer(&[q(3, 2), q(6, 10)]);
        assert_eq!(duplicate_supply(&inst, 1).unwrap(), inst);
        let d = duplicate_supply(&inst, 3).unwrap();
        assert_eq!(d.n_items(), 6);
        assert_eq!(d.n_buyers(), 1);
        assert!(duplicate_supply(&inst, 0).is_err());
    }

    /// Two ambiguous items whose copies point at each other's bundles.
    fn two_cycle() -> (Instance, BundledAllocation, SplitInstance) {
        let mut b = InstanceBuilder::new();
        let ja = b.add_buyer("a", int(1));
        let jb = b.add_buyer("b", int(1));
        let x = b.add_item("x");
        let y = b.add_item("y");
        let u = b.add_item("u");
        let w = b.add_item("w");
        b.set_value(x, ja, int(2)).set_value(x, jb, q(8, 10));
        b.set_value(y, jb, int(2)).set_value(y, ja, q(8, 10));
        b.set_value(u, ja, q(9, 10));
        b.set_value(w, jb, q(9, 10));
        let inst = b.build().unwrap();
        let split = split_ambiguous(&inst);
        let s = &split.instance;
        let id = |n: &str| s.item_by_name(n).unwrap();
        let bundling = BundledAllocation::new(vec![
            Bundle { buyer: ja, p_item: id("x+"), n_items: [id("y-"), id("u")].into_iter().collect() },
            Bundle { buyer: jb, p_item: id("y+"), n_items: [id("x-"), id("w")].into_iter().collect() },
        ]);
        bundling.validate(s).unwrap();
        (inst, bundling, split)
    }

    #[test]
    fn two_cycle_loses_one_member_per_bundle() {
        let (inst, bundling, split) = two_cycle();
        let before = bundling.value(&split.instance);
        let (sub, out) = make_unambiguous_deterministic(&inst, &bundling).unwrap();
        assert!(sub.is_unambiguous());
        out.validate(&sub).unwrap();
        assert_eq!(out.value(&sub), before - q(16, 10));
        assert!(out.value(&sub) * int(2) >= before);
        assert!(is_feasible(&inst, &out.to_allocation()).unwrap().is_feasible());
    }

    #[test]
    fn no_arcs_means_unchanged() {
        let (inst, ids) = one_buyer(&[q(3, 2), q(6, 10)]);
        let bundling = BundledAllocation::new(vec![Bundle {
            buyer: BuyerId(0),
            p_item: ids[0],
            n_items: [ids[1]].into_iter().collect(),
        }]);
        let (sub, out) = make_unambiguous_deterministic(&inst, &bundling).unwrap();
        assert_eq!(sub, inst);
        assert_eq!(out, bundling);
    }

    #[test]
    fn tree_keeps_the_better_levels() {
        // x+ heads A and x- sits in root R; dropping the member is cheaper than dropping A.
        let mut b = InstanceBuilder::new();
        let ja = b.add_buyer("a", int(1));
        let jr = b.add_buyer("r", int(1));
        let x = b.add_item("x");
        let r = b.add_item("r");
        b.set_value(x, ja, q(11, 10)).set_value(x, jr, q(9, 10));
        b.set_value(r, jr, int(3));
        let inst = b.build().unwrap();
        let split = split_ambiguous(&inst);
        let s = &split.instance;
        let id = |n: &str| s.item_by_name(n).unwrap();
        let bundling = BundledAllocation::new(vec![
            Bundle::singleton(ja, id("x+")),
            Bundle { buyer: jr, p_item: id("r"), n_items: [id("x-")].into_iter().collect() },
        ]);
        let (sub, out) = make_unambiguous_deterministic(&inst, &bundling).unwrap();
        assert_eq!(out.value(&sub), q(11, 10) + int(3));
        assert_eq!(out.bundles.len(), 2);
    }
}
