//! Export of unambiguous instances as GAP with a partition matroid on bins.
//!
//! Bins are the P-edges `(p, j)`. A P-item placed in its own bin uses no
//! space; in any other bin it needs `1 + eps_gap`, more than the unit
//! capacity. An N-item `i` in bin `(p, j)` uses `(rho_j - v_ij) / (v_pj - rho_j)`
//! so a full bin is exactly a permissible bundle. At most one bin per `p`
//! may be opened.

use std::collections::BTreeMap;
use std::path::Path;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::bundling::{Bundle, BundledAllocation};
use crate::error::{AvaError, Result};
use crate::model::{BuyerId, EdgeClass, Instance, ItemId, ItemKind, Num};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GapBin {
    /// Element index of the heading P-item.
    pub p: usize,
    pub buyer: BuyerId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GapEntry {
    pub value: Rational,
    pub size: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapInstance {
    pub eps_gap: Rational,
    pub elements: Vec<String>,
    pub buyers: Vec<String>,
    pub bins: Vec<GapBin>,
    /// Allowed (element, bin) pairs; missing pairs cannot be packed.
    pub entries: BTreeMap<(usize, usize), GapEntry>,
}

impl GapInstance {
    pub fn entry(&self, element: usize, bin: usize) -> Option<&GapEntry> {
        self.entries.get(&(element, bin))
    }

    /// Bins grouped by their heading P-item, in element order.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut by_p: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (b, bin) in self.bins.iter().enumerate() {
            by_p.entry(bin.p).or_default().push(b);
        }
        by_p.into_values().collect()
    }

    pub fn to_json_string(&self) -> String {
        let file = GapFile {
            eps_gap: Num::from_rational(&self.eps_gap),
            elements: self.elements.clone(),
            buyers: self.buyers.clone(),
            bins: self
                .bins
                .iter()
                .map(|b| BinRecord { p: self.elements[b.p].clone(), buyer: self.buyers[b.buyer.0].clone() })
                .collect(),
            groups: self.groups(),
            entries: self
                .entries
                .iter()
                .map(|(&(element, bin), e)| EntryRecord {
                    element,
                    bin,
                    value: Num::from_rational(&e.value),
                    size: Num::from_rational(&e.size),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("gap serializes")
    }

    pub fn from_json_str(s: &str) -> Result<GapInstance> {
        let file: GapFile = serde_json::from_str(s)?;
        let element_index = |name: &str| {
            file.elements
                .iter()
                .position(|e| e == name)
                .ok_or_else(|| AvaError::Validation(format!("unknown element {name:?}")))
        };
        let mut bins = Vec::new();
        for b in &file.bins {
            let j = file
                .buyers
                .iter()
                .position(|x| *x == b.buyer)
                .ok_or_else(|| AvaError::Validation(format!("unknown buyer {:?}", b.buyer)))?;
            bins.push(GapBin { p: element_index(&b.p)?, buyer: BuyerId(j) });
        }
        let mut entries = BTreeMap::new();
        for e in &file.entries {
            if e.element >= file.elements.len() || e.bin >= bins.len() {
                return Err(AvaError::Validation(format!("entry ({}, {}) out of range", e.element, e.bin)));
            }
            let entry = GapEntry { value: e.value.to_rational()?, size: e.size.to_rational()? };
            if entry.size < Rational::zero() || entry.value < Rational::zero() {
                return Err(AvaError::Validation("negative GAP size or value".into()));
            }
            entries.insert((e.element, e.bin), entry);
        }
        let gap = GapInstance {
            eps_gap: file.eps_gap.to_rational()?,
            elements: file.elements,
            buyers: file.buyers,
            bins,
            entries,
        };
        if gap.groups() != file.groups {
            return Err(AvaError::Validation("groups do not match the bins' P-items".into()));
        }
        Ok(gap)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<GapInstance> {
        GapInstance::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string() + "\n")?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GapFile {
    eps_gap: Num,
    elements: Vec<String>,
    buyers: Vec<String>,
    bins: Vec<BinRecord>,
    groups: Vec<Vec<usize>>,
    entries: Vec<EntryRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BinRecord {
    p: String,
    buyer: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRecord {
    element: usize,
    bin: usize,
    value: Num,
    size: Num,
}

pub fn export_gap(inst: &Instance, eps_gap: Rational) -> Result<GapInstance> {
    inst.ensure_unambiguous()?;
    if eps_gap <= Rational::zero() {
        return Err(AvaError::Validation("eps_gap must be positive".into()));
    }
    let blocked = Rational::one() + eps_gap;
    let mut bins = Vec::new();
    for p in inst.items() {
        if inst.item_kind(p) == ItemKind::P {
            for e in inst.edges(p) {
                bins.push(GapBin { p: p.0, buyer: e.buyer });
            }
        }
    }
    let mut entries = BTreeMap::new();
    for (b, bin) in bins.iter().enumerate() {
        let j = bin.buyer;
        let head = inst.excess(ItemId(bin.p), j).expect("P-edge");
        for i in inst.items() {
            let Some(class) = inst.class(i, j) else { continue };
            let v = inst.value(i, j);
            let entry = match class {
                EdgeClass::P if i.0 == bin.p => GapEntry { value: v, size: Rational::zero() },
                EdgeClass::P => GapEntry { value: Rational::zero(), size: blocked },
                EdgeClass::N if head > Rational::zero() => {
                    GapEntry { value: v, size: -inst.excess(i, j).expect("edge") / head }
                }
                EdgeClass::N => GapEntry { value: v, size: blocked },
            };
            entries.insert((i.0, b), entry);
        }
    }
    Ok(GapInstance {
        eps_gap,
        elements: inst.items().map(|i| inst.item_name(i).to_string()).collect(),
        buyers: inst.buyers().iter().map(|b| b.name.clone()).collect(),
        bins,
        entries,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GapSolution {
    pub open: Vec<usize>,
    /// element -> bin
    pub assignment: BTreeMap<usize, usize>,
}

impl GapSolution {
    pub fn value(&self, gap: &GapInstance) -> Result<Rational> {
        self.assignment
            .iter()
            .map(|(&e, &b)| {
                gap.entry(e, b)
                    .map(|x| x.value)
                    .ok_or_else(|| AvaError::GapInfeasible(format!("element {e} cannot enter bin {b}")))
            })
            .sum()
    }

    /// Checks the matroid, assignment and capacity constraints.
    pub fn validate(&self, gap: &GapInstance) -> Result<()> {
        let mut opened_group = BTreeMap::new();
        for &b in &self.open {
            let bin = gap.bins.get(b).ok_or_else(|| AvaError::GapInfeasible(format!("no bin {b}")))?;
            if let Some(prev) = opened_group.insert(bin.p, b) {
                return Err(AvaError::GapInfeasible(format!("bins {prev} and {b} share a group")));
            }
        }
        let mut load: BTreeMap<usize, Rational> = BTreeMap::new();
        for (&e, &b) in &self.assignment {
            if !self.open.contains(&b) {
                return Err(AvaError::GapInfeasible(format!("element {e} is in closed bin {b}")));
            }
            let entry =
                gap.entry(e, b).ok_or_else(|| AvaError::GapInfeasible(format!("element {e} cannot enter bin {b}")))?;
            *load.entry(b).or_insert_with(Rational::zero) += entry.size;
        }
        if let Some((b, l)) = load.iter().find(|(_, l)| **l > Rational::one()) {
            return Err(AvaError::GapInfeasible(format!("bin {b} overfull ({l})")));
        }
        Ok(())
    }
}

/// Converts a feasible maximal GAP solution into bundles of equal value.
pub fn gap_solution_to_bundles(sol: &GapSolution, gap: &GapInstance, inst: &Instance) -> Result<BundledAllocation> {
    sol.validate(gap)?;
    for p in inst.p_items() {
        if !sol.assignment.contains_key(&p.0) {
            return Err(AvaError::NotMaximal(format!("P-item {} is unassigned", inst.item_name(p))));
        }
    }
    let mut bundles = Vec::new();
    for &b in &sol.open {
        let bin = gap.bins[b];
        let members: Vec<usize> = sol.assignment.iter().filter(|(_, &bb)| bb == b).map(|(&e, _)| e).collect();
        if members.is_empty() {
            continue;
        }
        // capacity forbids foreign P-items, so only the head can be one
        if !members.contains(&bin.p) {
            return Err(AvaError::NotMaximal(format!("bin {b} is used without its P-item")));
        }
        let n_items = members.into_iter().filter(|&e| e != bin.p).map(ItemId).collect();
        bundles.push(Bundle { buyer: bin.buyer, p_item: ItemId(bin.p), n_items });
    }
    let out = BundledAllocation::new(bundles);
    out.validate(inst)?;
    Ok(out)
}

/// Inverse of [`gap_solution_to_bundles`]: opens one bin per bundle.
pub fn bundles_to_gap(bundling: &BundledAllocation, gap: &GapInstance) -> Result<GapSolution> {
    let mut sol = GapSolution::default();
    for bundle in &bundling.bundles {
        let b = gap
            .bins
            .iter()
            .position(|bin| bin.p == bundle.p_item.0 && bin.buyer == bundle.buyer)
            .ok_or_else(|| AvaError::InvalidBundling(format!("no bin for head {}", bundle.p_item)))?;
        sol.open.push(b);
        for i in bundle.items() {
            sol.assignment.insert(i.0, b);
        }
    }
    sol.open.sort_unstable();
    sol.validate(gap)?;
    Ok(sol)
}
