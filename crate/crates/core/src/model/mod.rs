//! Instances, edge classification, allocations and feasibility accounting.
//!
//! An [`Instance`] is a bipartite graph between items and buyers. Every edge
//! carries a value and (in GenAVA mode) a cost; plain AVA instances use unit
//! costs. A buyer's constraint is `sum v_ij x_ij >= rho_j * sum c_ij x_ij`.
//! Optional budget resources add `sum l_ij x_ij <= B_j` per buyer.
//!
//! All data is exact ([`Rational`]); feasibility is decided without tolerance.

pub mod json;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{AvaError, Result};
use crate::rational::Rational;

pub use json::{InstanceFile, Num};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ItemId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BuyerId(pub usize);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "item#{}", self.0)
    }
}

impl fmt::Display for BuyerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "buyer#{}", self.0)
    }
}

/// Sign class of an edge: `P` for non-negative excess, `N` for a deficit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeClass {
    P,
    N,
}

/// Classifies an edge by its excess `v - rho * c`. Zero excess is `P`.
pub fn classify_edge(v: &Rational, rho: &Rational, c: &Rational) -> EdgeClass {
    if v - rho * c >= Rational::zero() {
        EdgeClass::P
    } else {
        EdgeClass::N
    }
}

/// How an item relates to the P/N split across all of its edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ItemKind {
    /// Every edge is a P-edge.
    P,
    /// Every edge is an N-edge.
    N,
    /// Both kinds of edges.
    Ambiguous,
    /// No edges at all.
    Isolated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Buyer {
    pub name: String,
    pub rho: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub buyer: BuyerId,
    pub value: Rational,
    /// Per-unit cost in the average-value constraint; 1 outside GenAVA mode.
    pub cost: Rational,
}

/// A budgeted resource: per-buyer budget (absent = unlimited) and per-edge costs.
#[derive(Clone, Debug, PartialEq)]
pub struct Resource {
    pub name: String,
    pub budgets: Vec<Option<Rational>>,
    pub costs: Vec<BTreeMap<BuyerId, Rational>>,
}

impl Resource {
    pub fn budget(&self, j: BuyerId) -> Option<&Rational> {
        self.budgets[j.0].as_ref()
    }

    pub fn cost(&self, i: ItemId, j: BuyerId) -> Rational {
        self.costs[i.0].get(&j).copied().unwrap_or_else(Rational::zero)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    items: Vec<String>,
    buyers: Vec<Buyer>,
    edges: Vec<Vec<Edge>>,
    genava: bool,
    resources: Vec<Resource>,
    notes: Vec<String>,
}

impl Instance {
    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_buyers(&self) -> usize {
        self.buyers.len()
    }

    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        (0..self.items.len()).map(ItemId)
    }

    pub fn buyer_ids(&self) -> impl Iterator<Item = BuyerId> + '_ {
        (0..self.buyers.len()).map(BuyerId)
    }

    pub fn item_name(&self, i: ItemId) -> &str {
        &self.items[i.0]
    }

    pub fn buyer(&self, j: BuyerId) -> &Buyer {
        &self.buyers[j.0]
    }

    pub fn buyers(&self) -> &[Buyer] {
        &self.buyers
    }

    pub fn rho(&self, j: BuyerId) -> Rational {
        self.buyers[j.0].rho
    }

    pub fn item_by_name(&self, name: &str) -> Option<ItemId> {
        self.items.iter().position(|n| n == name).map(ItemId)
    }

    pub fn buyer_by_name(&self, name: &str) -> Option<BuyerId> {
        self.buyers.iter().position(|b| b.name == name).map(BuyerId)
    }

    /// Edges of item `i`, sorted by buyer.
    pub fn edges(&self, i: ItemId) -> &[Edge] {
        &self.edges[i.0]
    }

    pub fn edge(&self, i: ItemId, j: BuyerId) -> Option<&Edge> {
        self.edges[i.0].iter().find(|e| e.buyer == j)
    }

    pub fn has_edge(&self, i: ItemId, j: BuyerId) -> bool {
        self.edge(i, j).is_some()
    }

    /// Value of the pair, zero for non-edges.
    pub fn value(&self, i: ItemId, j: BuyerId) -> Rational {
        self.edge(i, j).map(|e| e.value).unwrap_or_else(Rational::zero)
    }

    /// `v_ij - rho_j * c_ij` for an edge.
    pub fn excess(&self, i: ItemId, j: BuyerId) -> Option<Rational> {
        self.edge(i, j).map(|e| e.value - self.buyers[j.0].rho * e.cost)
    }

    pub fn class(&self, i: ItemId, j: BuyerId) -> Option<EdgeClass> {
        self.edge(i, j).map(|e| classify_edge(&e.value, &self.buyers[j.0].rho, &e.cost))
    }

    pub fn item_kind(&self, i: ItemId) -> ItemKind {
        let mut has_p = false;
        let mut has_n = false;
        for e in &self.edges[i.0] {
            match classify_edge(&e.value, &self.buyers[e.buyer.0].rho, &e.cost) {
                EdgeClass::P => has_p = true,
                EdgeClass::N => has_n = true,
            }
        }
        match (has_p, has_n) {
            (true, true) => ItemKind::Ambiguous,
            (true, false) => ItemKind::P,
            (false, true) => ItemKind::N,
            (false, false) => ItemKind::Isolated,
        }
    }

    /// Every item is a P-item, an N-item, or isolated.
    pub fn is_unambiguous(&self) -> bool {
        self.items().all(|i| self.item_kind(i) != ItemKind::Ambiguous)
    }

    pub fn ensure_unambiguous(&self) -> Result<()> {
        match self.items().find(|&i| self.item_kind(i) == ItemKind::Ambiguous) {
            Some(i) => Err(AvaError::AmbiguousInstance { item: self.item_name(i).to_string() }),
            None => Ok(()),
        }
    }

    pub fn p_items(&self) -> Vec<ItemId> {
        self.items().filter(|&i| self.item_kind(i) == ItemKind::P).collect()
    }

    pub fn n_items_list(&self) -> Vec<ItemId> {
        self.items().filter(|&i| self.item_kind(i) == ItemKind::N).collect()
    }

    /// True when any edge carries an explicit (GenAVA) cost.
    pub fn is_genava(&self) -> bool {
        self.genava
    }

    pub fn resources(&self) -> &[Resource] {
        &self.resources
    }

    pub fn has_budgets(&self) -> bool {
        !self.resources.is_empty()
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Number of P-edges and N-edges.
    pub fn edge_counts(&self) -> (usize, usize) {
        let mut p = 0;
        let mut n = 0;
        for i in self.items() {
            for e in self.edges(i) {
                match self.class(i, e.buyer) {
                    Some(EdgeClass::P) => p += 1,
                    _ => n += 1,
                }
            }
        }
        (p, n)
    }

    /// Builder pre-populated with this instance's data.
    pub fn to_builder(&self) -> InstanceBuilder {
        InstanceBuilder {
            items: self.items.clone(),
            buyers: self.buyers.clone(),
            values: self.edges.iter().map(|es| es.iter().map(|e| (e.buyer, e.value)).collect()).collect(),
            costs: if self.genava {
                self.edges.iter().map(|es| es.iter().map(|e| (e.buyer, e.cost)).collect()).collect()
            } else {
                vec![BTreeMap::new(); self.items.len()]
            },
            resources: self.resources.clone(),
            notes: self.notes.clone(),
        }
    }

    /// Keeps only the edges for which `keep` returns true.
    pub fn filter_edges(&self, mut keep: impl FnMut(ItemId, &Edge) -> bool) -> Instance {
        let mut out = self.clone();
        for (idx, es) in out.edges.iter_mut().enumerate() {
            es.retain(|e| keep(ItemId(idx), e));
        }
        for r in &mut out.resources {
            for (idx, costs) in r.costs.iter_mut().enumerate() {
                let kept = &out.edges[idx];
                costs.retain(|j, _| kept.iter().any(|e| e.buyer == *j));
            }
        }
        out
    }
}

/// Incremental construction of an [`Instance`]; `build` validates invariants.
#[derive(Clone, Debug, Default)]
pub struct InstanceBuilder {
    items: Vec<String>,
    buyers: Vec<Buyer>,
    values: Vec<BTreeMap<BuyerId, Rational>>,
    costs: Vec<BTreeMap<BuyerId, Rational>>,
    resources: Vec<Resource>,
    notes: Vec<String>,
}

impl InstanceBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_buyer(&mut self, name: impl Into<String>, rho: Rational) -> BuyerId {
        self.buyers.push(Buyer { name: name.into(), rho });
        for r in &mut self.resources {
            r.budgets.push(None);
        }
        BuyerId(self.buyers.len() - 1)
    }

    pub fn add_item(&mut self, name: impl Into<String>) -> ItemId {
        self.items.push(name.into());
        self.values.push(BTreeMap::new());
        self.costs.push(BTreeMap::new());
        for r in &mut self.resources {
            r.costs.push(BTreeMap::new());
        }
        ItemId(self.items.len() - 1)
    }

    pub fn set_value(&mut self, i: ItemId, j: BuyerId, v: Rational) -> &mut Self {
        self.values[i.0].insert(j, v);
        self
    }

    pub fn set_cost(&mut self, i: ItemId, j: BuyerId, c: Rational) -> &mut Self {
        self.costs[i.0].insert(j, c);
        self
    }

    pub fn add_resource(&mut self, name: impl Into<String>) -> usize {
        self.resources.push(Resource {
            name: name.into(),
            budgets: vec![None; self.buyers.len()],
            costs: vec![BTreeMap::new(); self.items.len()],
        });
        self.resources.len() - 1
    }

    pub fn set_budget(&mut self, resource: usize, j: BuyerId, budget: Rational) -> &mut Self {
        self.resources[resource].budgets[j.0] = Some(budget);
        self
    }

    pub fn set_resource_cost(&mut self, resource: usize, i: ItemId, j: BuyerId, c: Rational) -> &mut Self {
        self.resources[resource].costs[i.0].insert(j, c);
        self
    }

    pub fn note(&mut self, note: impl Into<String>) -> &mut Self {
        self.notes.push(note.into());
        self
    }

    pub fn build(self) -> Result<Instance> {
        let invalid = |msg: String| Err(AvaError::Validation(msg));
        let mut seen = HashMap::new();
        for (idx, name) in self.items.iter().enumerate() {
            if seen.insert(name.as_str(), idx).is_some() {
                return invalid(format!("duplicate item id {name:?}"));
            }
        }
        let mut seen = HashMap::new();
        for (idx, b) in self.buyers.iter().enumerate() {
            if seen.insert(b.name.as_str(), idx).is_some() {
                return invalid(format!("duplicate buyer id {:?}", b.name));
            }
            if b.rho <= Rational::zero() {
                return invalid(format!("buyer {:?} has non-positive rho", b.name));
            }
        }
        let genava = self.costs.iter().any(|c| !c.is_empty());
        let mut edges = Vec::with_capacity(self.items.len());
        for (idx, values) in self.values.iter().enumerate() {
            let name = &self.items[idx];
            let mut es = Vec::with_capacity(values.len());
            for (&j, &v) in values {
                if j.0 >= self.buyers.len() {
                    return invalid(format!("item {name:?} references unknown buyer {j}"));
                }
                if v < Rational::zero() {
                    return invalid(format!("item {name:?} has negative value"));
                }
                let cost = match self.costs[idx].get(&j) {
                    Some(c) if *c < Rational::zero() => {
                        return invalid(format!("item {name:?} has negative cost"));
                    }
                    Some(c) => *c,
                    None if genava => {
                        return invalid(format!(
                            "item {name:?} has a value for buyer {:?} but no cost",
                            self.buyers[j.0].name
                        ));
                    }
                    None => Rational::one(),
                };
                // Zero-valued pairs are not edges.
                if v.is_zero() {
                    continue;
                }
                es.push(Edge { buyer: j, value: v, cost });
            }
            for j in self.costs[idx].keys() {
                if !values.contains_key(j) {
                    return invalid(format!("item {name:?} has a cost for a non-edge"));
                }
            }
            edges.push(es);
        }
        for r in &self.resources {
            for b in r.budgets.iter().flatten() {
                if *b <= Rational::zero() {
                    return invalid(format!("resource {:?} has a non-positive budget", r.name));
                }
            }
            for (idx, costs) in r.costs.iter().enumerate() {
                for (j, c) in costs {
                    if *c < Rational::zero() {
                        return invalid(format!("resource {:?} has a negative cost", r.name));
                    }
                    if !self.values[idx].contains_key(j) {
                        return invalid(format!(
                            "resource {:?} cost on non-edge ({:?}, {:?})",
                            r.name, self.items[idx], self.buyers[j.0].name
                        ));
                    }
                }
            }
        }
        let mut resources = self.resources;
        for r in &mut resources {
            for (idx, costs) in r.costs.iter_mut().enumerate() {
                costs.retain(|j, _| edges[idx].iter().any(|e: &Edge| e.buyer == *j));
            }
        }
        Ok(Instance { items: self.items, buyers: self.buyers, edges, genava, resources, notes: self.notes })
    }
}

/// Integral assignment of items to buyers; unassigned items are absent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Allocation {
    assignment: BTreeMap<ItemId, BuyerId>,
}

impl Allocation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Assigns `i` to `j`, replacing any earlier assignment of `i`.
    pub fn assign(&mut self, i: ItemId, j: BuyerId) -> Option<BuyerId> {
        self.assignment.insert(i, j)
    }

    pub fn unassign(&mut self, i: ItemId) -> Option<BuyerId> {
        self.assignment.remove(&i)
    }

    pub fn get(&self, i: ItemId) -> Option<BuyerId> {
        self.assignment.get(&i).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ItemId, BuyerId)> + '_ {
        self.assignment.iter().map(|(i, j)| (*i, *j))
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn items_of(&self, j: BuyerId) -> Vec<ItemId> {
        self.iter().filter(|(_, b)| *b == j).map(|(i, _)| i).collect()
    }
}

impl FromIterator<(ItemId, BuyerId)> for Allocation {
    fn from_iter<T: IntoIterator<Item = (ItemId, BuyerId)>>(iter: T) -> Self {
        Allocation { assignment: iter.into_iter().collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    AverageValue,
    Budget { resource: usize },
}

/// One violated constraint with its signed slack (negative).
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub buyer: BuyerId,
    pub constraint: ConstraintKind,
    pub slack: Rational,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_edges(inst: &Instance, alloc: &Allocation) -> Result<()> {
    for (i, j) in alloc.iter() {
        if i.0 >= inst.n_items() || j.0 >= inst.n_buyers() || !inst.has_edge(i, j) {
            return Err(AvaError::UnknownEdge {
                item: inst.items.get(i.0).cloned().unwrap_or_else(|| i.to_string()),
                buyer: inst.buyers.get(j.0).map(|b| b.name.clone()).unwrap_or_else(|| j.to_string()),
            });
        }
    }
    Ok(())
}

/// Checks every buyer's average-value constraint and every configured budget.
pub fn is_feasible(inst: &Instance, alloc: &Allocation) -> Result<FeasibilityReport> {
    check_edges(inst, alloc)?;
    let mut slack = vec![Rational::zero(); inst.n_buyers()];
    let mut spent = vec![vec![Rational::zero(); inst.n_buyers()]; inst.resources.len()];
    for (i, j) in alloc.iter() {
        slack[j.0] += inst.excess(i, j).expect("edge checked");
        for (r, res) in inst.resources.iter().enumerate() {
            spent[r][j.0] += res.cost(i, j);
        }
    }
    let mut violations = Vec::new();
    for j in inst.buyer_ids() {
        if slack[j.0] < Rational::zero() {
            violations.push(Violation { buyer: j, constraint: ConstraintKind::AverageValue, slack: slack[j.0] });
        }
        for (r, res) in inst.resources.iter().enumerate() {
            if let Some(b) = res.budget(j) {
                let s = b - spent[r][j.0];
                if s < Rational::zero() {
                    violations.push(Violation {
                        buyer: j,
                        constraint: ConstraintKind::Budget { resource: r },
                        slack: s,
                    });
                }
            }
        }
    }
    Ok(FeasibilityReport { violations })
}

/// `v . x`: total value of assigned pairs.
pub fn allocation_value(inst: &Instance, alloc: &Allocation) -> Result<Rational> {
    check_edges(inst, alloc)?;
    Ok(alloc.iter().map(|(i, j)| inst.value(i, j)).sum())
}
