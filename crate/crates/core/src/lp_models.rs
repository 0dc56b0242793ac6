//! Builders for the naive LP, the Bundle-LP (optionally budgeted) and the
//! two i.i.d. bundle LPs over item types.
//!
//! Bundle variables `x_ijp` exist only for `i == p` or when `(i, j)` is an
//! N-edge; all other P-items of a bundle are omitted instead of pinned to 0.
//! Variables are ordered by (item, buyer, p) in declaration order.
//!
//! Sizes, with `B` the number of P-edges and `M` the number of member
//! variables (pairs of a bundle `(p, j)` and an N-edge `(i, j)`):
//!
//! | LP        | variables | rows |
//! |-----------|-----------|------|
//! | naive     | `|E|`     | `n + (items with an edge)` plus `|E|` bounds |
//! | bundle    | `B + M`   | `B + (items with a variable) + M` |
//! | budgeted  | `B + M`   | bundle rows `+ sum_l (b_l + B_l)` |
//! | OPTon     | `B + M`   | as bundle |
//! | OPToff    | `B + M`   | as bundle |
//!
//! where `b_l` counts buyers with a budget in resource `l` and `B_l` the
//! P-edges of those buyers.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{AvaError, Result};
use crate::iid::IidModel;
use crate::lp::{solve_lp, LinearProgram, LpSolution, Relation, DEFAULT_TOLERANCE};
use crate::model::{BuyerId, EdgeClass, Instance, ItemId};
use crate::rational::{self, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BundleVar {
    pub item: ItemId,
    pub buyer: BuyerId,
    pub p: ItemId,
}

impl BundleVar {
    pub fn is_head(&self) -> bool {
        self.item == self.p
    }
}

/// A bundle LP together with the meaning of its columns.
#[derive(Clone, Debug)]
pub struct BundleLp {
    pub lp: LinearProgram,
    pub vars: Vec<BundleVar>,
    /// Bundles `(buyer, p)` in row order of the average-value rows.
    pub bundles: Vec<(BuyerId, ItemId)>,
    index: HashMap<BundleVar, usize>,
}

impl BundleLp {
    pub fn var(&self, item: ItemId, buyer: BuyerId, p: ItemId) -> Option<usize> {
        self.index.get(&BundleVar { item, buyer, p }).copied()
    }
}

/// Right-hand sides that differ between the offline and i.i.d. variants.
struct Shape<'a> {
    item_rhs: &'a dyn Fn(ItemId) -> Rational,
    link: &'a dyn Fn(ItemId) -> Rational,
}

fn bundle_structure(inst: &Instance, shape: Shape<'_>) -> BundleLp {
    let mut bundles = Vec::new();
    for p in inst.items() {
        for e in inst.edges(p) {
            if inst.class(p, e.buyer) == Some(EdgeClass::P) {
                bundles.push((e.buyer, p));
            }
        }
    }
    let mut lp = LinearProgram::new();
    let mut vars = Vec::new();
    let mut index = HashMap::new();
    for i in inst.items() {
        for e in inst.edges(i) {
            let j = e.buyer;
            let class = inst.class(i, j);
            for &(bj, p) in &bundles {
                if bj != j || !(i == p || class == Some(EdgeClass::N)) {
                    continue;
                }
                let v = BundleVar { item: i, buyer: j, p };
                let name = format!("x({},{},{})", inst.item_name(i), inst.buyer(j).name, inst.item_name(p));
                let k = lp.add_var(name, e.value, None);
                vars.push(v);
                index.insert(v, k);
            }
        }
    }
    let mut sorted: Vec<usize> = (0..vars.len()).collect();
    sorted.sort_by_key(|&k| vars[k]);

    for &(j, p) in &bundles {
        let coeffs: Vec<(usize, Rational)> = sorted
            .iter()
            .filter(|&&k| vars[k].buyer == j && vars[k].p == p)
            .map(|&k| (k, -inst.excess(vars[k].item, j).expect("edge")))
            .collect();
        let name = format!("ros({},{})", inst.buyer(j).name, inst.item_name(p));
        lp.add_row(name, coeffs, Relation::Le, Rational::zero());
    }
    for i in inst.items() {
        let coeffs: Vec<(usize, Rational)> =
            sorted.iter().filter(|&&k| vars[k].item == i).map(|&k| (k, Rational::from_integer(1))).collect();
        if !coeffs.is_empty() {
            lp.add_row(format!("item({})", inst.item_name(i)), coeffs, Relation::Le, (shape.item_rhs)(i));
        }
    }
    for &k in &sorted {
        let v = vars[k];
        if v.is_head() {
            continue;
        }
        let head = index[&BundleVar { item: v.p, buyer: v.buyer, p: v.p }];
        let name = format!("link({},{},{})", inst.item_name(v.item), inst.buyer(v.buyer).name, inst.item_name(v.p));
        lp.add_row(
            name,
            vec![(k, Rational::from_integer(1)), (head, -(shape.link)(v.item))],
            Relation::Le,
            Rational::zero(),
        );
    }
    BundleLp { lp, vars, bundles, index }
}

/// Relaxation of the allocation ILP: `0 <= x_ij <= 1`, one average-value row
/// per buyer and one row per item.
pub fn build_naive_lp(inst: &Instance) -> LinearProgram {
    let mut lp = LinearProgram::new();
    let mut var = HashMap::new();
    for i in inst.items() {
        for e in inst.edges(i) {
            let name = format!("x({},{})", inst.item_name(i), inst.buyer(e.buyer).name);
            var.insert((i, e.buyer), lp.add_var(name, e.value, Some(Rational::from_integer(1))));
        }
    }
    for j in inst.buyer_ids() {
        let coeffs: Vec<(usize, Rational)> =
            inst.items().filter_map(|i| var.get(&(i, j)).map(|&k| (k, -inst.excess(i, j).expect("edge")))).collect();
        lp.add_row(format!("avg({})", inst.buyer(j).name), coeffs, Relation::Le, Rational::zero());
    }
    for i in inst.items() {
        let coeffs: Vec<(usize, Rational)> =
            inst.edges(i).iter().map(|e| (var[&(i, e.buyer)], Rational::from_integer(1))).collect();
        if !coeffs.is_empty() {
            lp.add_row(format!("item({})", inst.item_name(i)), coeffs, Relation::Le, Rational::from_integer(1));
        }
    }
    lp
}

pub fn build_bundle_lp(inst: &Instance) -> Result<BundleLp> {
    inst.ensure_unambiguous()?;
    let one = |_| Rational::from_integer(1);
    Ok(bundle_structure(inst, Shape { item_rhs: &one, link: &one }))
}

/// Bundle-LP plus, per resource, a per-buyer budget row and a per-bundle row
/// `sum_i l_ij x_ijp <= B_j x_pjp`.
pub fn build_bundle_lp_budgeted(inst: &Instance) -> Result<BundleLp> {
    if !inst.has_budgets() {
        return Err(AvaError::MissingBudgets);
    }
    let mut out = build_bundle_lp(inst)?;
    for res in inst.resources() {
        for j in inst.buyer_ids() {
            let Some(budget) = res.budget(j) else { continue };
            let coeffs: Vec<(usize, Rational)> = (0..out.vars.len())
                .filter(|&k| out.vars[k].buyer == j)
                .map(|k| (k, res.cost(out.vars[k].item, j)))
                .filter(|(_, c)| !c.is_zero())
                .collect();
            out.lp.add_row(format!("budget({},{})", res.name, inst.buyer(j).name), coeffs, Relation::Le, *budget);
        }
        for &(j, p) in &out.bundles {
            let Some(budget) = res.budget(j) else { continue };
            let mut coeffs: Vec<(usize, Rational)> = Vec::new();
            for k in 0..out.vars.len() {
                let v = out.vars[k];
                if v.buyer != j || v.p != p {
                    continue;
                }
                let mut c = res.cost(v.item, j);
                if v.is_head() {
                    c -= budget;
                }
                if !c.is_zero() {
                    coeffs.push((k, c));
                }
            }
            let name = format!("bundle_budget({},{},{})", res.name, inst.buyer(j).name, inst.item_name(p));
            out.lp.add_row(name, coeffs, Relation::Le, Rational::zero());
        }
    }
    Ok(out)
}

/// LP over item types bounding the best committed online algorithm.
pub fn build_opton_lp(model: &IidModel) -> BundleLp {
    let rhs = |i: ItemId| model.expected_arrivals(i);
    bundle_structure(model.types(), Shape { item_rhs: &rhs, link: &rhs })
}

/// `6 / min(1, gamma) * ln T / ln ln T`.
pub fn compute_kappa(gamma: f64, horizon: usize) -> Result<f64> {
    if horizon < 3 {
        return Err(AvaError::Domain(format!("kappa needs T >= 3, got {horizon}")));
    }
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(AvaError::Domain(format!("kappa needs gamma > 0, got {gamma}")));
    }
    let t = horizon as f64;
    Ok(6.0 / gamma.min(1.0) * t.ln() / t.ln().ln())
}

/// LP over item types bounding the ex-post optimum when every type has at
/// least `gamma` expected arrivals.
pub fn build_optoff_lp(model: &IidModel, gamma: f64) -> Result<BundleLp> {
    let kappa = compute_kappa(gamma, model.horizon())?;
    let low: Vec<String> = model
        .types()
        .items()
        .filter(|&i| rational::to_f64(&model.expected_arrivals(i)) < gamma)
        .map(|i| model.types().item_name(i).to_string())
        .collect();
    if !low.is_empty() {
        return Err(AvaError::GammaViolated { types: low });
    }
    let ceil = |r: Rational| -> Rational { Rational::from_integer(r.ceil().to_integer()) };
    let item_rhs = |i: ItemId| ceil(model.expected_arrivals(i)) * Rational::from_integer(2);
    let link = |i: ItemId| {
        let a = rational::to_f64(&model.expected_arrivals(i));
        Rational::from_integer((a * kappa).ceil() as i128)
    };
    Ok(bundle_structure(model.types(), Shape { item_rhs: &item_rhs, link: &link }))
}

/// Optimal (or supplied) values of a bundle LP, keyed like the LP columns.
#[derive(Clone, Debug)]
pub struct BundleLpSolution {
    pub model: BundleLp,
    pub x: Vec<f64>,
    pub objective: f64,
    pub exact_objective: Option<BigRational>,
}

impl BundleLpSolution {
    /// Wraps a fractional point after checking it against the LP within `tol`.
    pub fn from_values(model: BundleLp, x: Vec<f64>, tol: f64) -> Result<BundleLpSolution> {
        if x.len() != model.vars.len() {
            return Err(AvaError::InfeasibleFractional("wrong number of values".into()));
        }
        let viol = model.lp.max_violation(&x);
        if viol > tol {
            return Err(AvaError::InfeasibleFractional(format!("violation {viol:e}")));
        }
        let objective = model.lp.objective_at(&x);
        Ok(BundleLpSolution { model, x, objective, exact_objective: None })
    }

    pub fn from_lp(model: BundleLp, sol: &LpSolution) -> Result<BundleLpSolution> {
        let sol = sol.clone().ensure_optimal()?;
        Ok(BundleLpSolution {
            model,
            x: sol.values.clone(),
            objective: sol.objective,
            exact_objective: sol.exact_objective,
        })
    }

    pub fn get(&self, item: ItemId, buyer: BuyerId, p: ItemId) -> f64 {
        self.model.var(item, buyer, p).map(|k| self.x[k]).unwrap_or(0.0)
    }

    pub fn best_objective(&self) -> f64 {
        self.exact_objective.as_ref().map(rational::big_to_f64).unwrap_or(self.objective)
    }
}

/// Solves a bundle LP with the default simplex tolerance.
pub fn solve_bundle_lp(model: BundleLp) -> Result<BundleLpSolution> {
    let sol = solve_lp(&model.lp, DEFAULT_TOLERANCE)?;
    BundleLpSolution::from_lp(model, &sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InstanceBuilder;
    use crate::rational::{int, q, to_big};

    fn single(v: Rational) -> Instance {
        let mut b = InstanceBuilder::new();
        let j = b.add_buyer("b", int(1));
        let i = b.add_item("i");
        b.set_value(i, j, v);
        b.build().unwrap()
    }

    #[test]
    fn naive_lp_single_edges() {
        let sol = solve_lp(&build_naive_lp(&single(int(2))), 1e-9).unwrap();
        assert_eq!(sol.exact_objective, Some(to_big(&int(2))));
        let sol = solve_lp(&build_naive_lp(&single(q(1, 2))), 1e-9).unwrap();
        assert_eq!(sol.exact_objective, Some(to_big(&int(0))));
    }

    #[test]
    fn bundle_lp_without_p_edges_is_empty() {
        let m = build_bundle_lp(&single(q(1, 2))).unwrap();
        assert_eq!(m.lp.n_vars(), 0);
        let sol = solve_bundle_lp(m).unwrap();
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn kappa_values() {
        assert!((compute_kappa(1.0, 1000).unwrap() - 21.446).abs() < 1e-3);
        assert_eq!(compute_kappa(2.0, 1000).unwrap(), compute_kappa(1.0, 1000).unwrap());
        assert!((compute_kappa(0.5, 1000).unwrap() - 42.89).abs() < 1e-2);
        assert!(compute_kappa(1.0, 2).is_err());
        assert!(compute_kappa(0.0, 10).is_err());
    }

    #[test]
    fn single_type_opton_and_optoff() {
        let inst = single(int(2));
        let model = IidModel::new(inst, vec![int(1)], 4).unwrap();
        let on = solve_bundle_lp(build_opton_lp(&model)).unwrap();
        assert_eq!(on.exact_objective, Some(to_big(&int(8))));
        assert!((on.x[0] - 4.0).abs() < 1e-9);
        let off = solve_bundle_lp(build_optoff_lp(&model, 1.0).unwrap()).unwrap();
        assert_eq!(off.exact_objective, Some(to_big(&int(16))));
    }

    #[test]
    fn optoff_rejects_rare_types() {
        let mut b = InstanceBuilder::new();
        let j = b.add_buyer("b", int(1));
        let x = b.add_item("x");
        let y = b.add_item("y");
        b.set_value(x, j, int(2)).set_value(y, j, int(2));
        let model = IidModel::new(b.build().unwrap(), vec![q(1, 10), q(9, 10)], 5).unwrap();
        match build_optoff_lp(&model, 1.0) {
            Err(AvaError::GammaViolated { types }) => assert_eq!(types, vec!["x".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn budget_row_binds_member() {
        let mut b = InstanceBuilder::new();
        let j = b.add_buyer("b", int(1));
        let r = b.add_resource("r");
        b.set_budget(r, j, int(5));
        let p = b.add_item("p");
        let n = b.add_item("n");
        b.set_value(p, j, int(3)).set_value(n, j, q(1, 2));
        b.set_resource_cost(r, n, j, int(5));
        let inst = b.build().unwrap();
        let m = build_bundle_lp_budgeted(&inst).unwrap();
        let row = m.lp.rows.iter().find(|r| r.name.starts_with("bundle_budget")).unwrap();
        assert_eq!(row.coeffs, vec![(0, int(-5)), (1, int(5))]);
        assert!(build_bundle_lp_budgeted(&single(int(2))).is_err());
    }
}
