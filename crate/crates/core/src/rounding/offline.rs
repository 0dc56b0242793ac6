use num_traits::Zero;

use super::{stream_id, uniform, RoundingParams, FRACTIONAL_TOLERANCE};
use crate::bundling::{Bundle, BundledAllocation};
use crate::error::{AvaError, Result};
use crate::lp_models::BundleLpSolution;
use crate::model::{BuyerId, EdgeClass, Instance, ItemId, ItemKind};
use crate::rational::Rational;

fn check_solution(inst: &Instance, x: &BundleLpSolution) -> Result<()> {
    inst.ensure_unambiguous()?;
    for v in &x.model.vars {
        let class = (v.item.0 < inst.n_items()).then(|| inst.class(v.item, v.buyer)).flatten();
        let ok = match class {
            Some(EdgeClass::P) => v.is_head(),
            Some(EdgeClass::N) => !v.is_head(),
            None => false,
        };
        if !ok {
            return Err(AvaError::InfeasibleFractional(format!(
                "variable ({}, {}, {}) does not belong to this instance",
                v.item, v.buyer, v.p
            )));
        }
    }
    if x.x.len() != x.model.vars.len() {
        return Err(AvaError::InfeasibleFractional("wrong number of values".into()));
    }
    let viol = x.model.lp.max_violation(&x.x);
    if viol > FRACTIONAL_TOLERANCE {
        return Err(AvaError::InfeasibleFractional(format!("constraint violation {viol:e}")));
    }
    Ok(())
}

struct Open {
    model_index: usize,
    bundle: Bundle,
    residual: Rational,
}

fn round(inst: &Instance, x: &BundleLpSolution, params: &RoundingParams, budgets: bool) -> Result<BundledAllocation> {
    check_solution(inst, x)?;
    let res = if budgets { inst.resources() } else { &[] };
    let mut spent = vec![vec![Rational::zero(); inst.n_buyers()]; res.len()];
    let fits = |spent: &[Vec<Rational>], i: ItemId, j: BuyerId| {
        res.iter().zip(spent).all(|(r, s)| match r.budget(j) {
            Some(b) => s[j.0] + r.cost(i, j) <= *b,
            None => true,
        })
    };

    let mut open: Vec<Open> = Vec::new();
    for p in inst.items().filter(|&p| inst.item_kind(p) == ItemKind::P) {
        let u = uniform(params.seed, stream_id(0, p.0, 0));
        let mut cum = 0.0;
        let mut pick = None;
        for (k, &(j, head)) in x.model.bundles.iter().enumerate() {
            if head != p {
                continue;
            }
            let xp = x.get(p, j, p).max(0.0);
            cum += xp;
            if xp > 0.0 && u < cum {
                pick = Some((k, j));
                break;
            }
        }
        let Some((k, j)) = pick else { continue };
        if !fits(&spent, p, j) {
            continue;
        }
        for (r, s) in res.iter().zip(spent.iter_mut()) {
            s[j.0] += r.cost(p, j);
        }
        open.push(Open { model_index: k, bundle: Bundle::singleton(j, p), residual: inst.excess(p, j).expect("edge") });
    }

    for i in inst.items().filter(|&i| inst.item_kind(i) == ItemKind::N) {
        let mut hits = Vec::new();
        for (o, b) in open.iter().enumerate() {
            let (j, p) = (b.bundle.buyer, b.bundle.p_item);
            let xi = x.get(i, j, p).max(0.0);
            if xi <= 0.0 {
                continue;
            }
            let prob = (params.alpha * xi / x.get(p, j, p)).min(1.0);
            if uniform(params.seed, stream_id(1, i.0, b.model_index)) < prob {
                hits.push(o);
            }
        }
        let [o] = hits[..] else { continue };
        let j = open[o].bundle.buyer;
        let after = open[o].residual + inst.excess(i, j).expect("edge");
        if after >= Rational::zero() && fits(&spent, i, j) {
            for (r, s) in res.iter().zip(spent.iter_mut()) {
                s[j.0] += r.cost(i, j);
            }
            open[o].residual = after;
            open[o].bundle.n_items.insert(i);
        }
    }
    Ok(BundledAllocation::new(open.into_iter().map(|o| o.bundle).collect()))
}

/// Two-phase rounding: every P-item opens one bundle drawn from its
/// `x_pjp` (nothing with the leftover probability), then each N-item joins
/// an open bundle when exactly one of its `alpha x_ijp / x_pjp` coins hits
/// and the bundle stays permissible.
pub fn round_offline(inst: &Instance, x: &BundleLpSolution, params: &RoundingParams) -> Result<BundledAllocation> {
    round(inst, x, params, false)
}

/// As [`round_offline`] but a P-item opens, and an N-item joins, only when
/// every budget of the buyer still holds afterwards.
pub fn round_offline_budgeted(
    inst: &Instance,
    x: &BundleLpSolution,
    params: &RoundingParams,
) -> Result<BundledAllocation> {
    if !inst.has_budgets() {
        return Err(AvaError::MissingBudgets);
    }
    round(inst, x, params, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_integrality_gap;
    use crate::lp_models::{build_bundle_lp, solve_bundle_lp};
    use crate::model::{is_feasible, InstanceBuilder};
    use crate::rational::{int, q};

    #[test]
    fn single_p_item_always_opens() {
        let mut b = InstanceBuilder::new();
        let j = b.add_buyer("b", int(1));
        let p = b.add_item("p");
        b.set_value(p, j, int(2));
        let inst = b.build().unwrap();
        let x = solve_bundle_lp(build_bundle_lp(&inst).unwrap()).unwrap();
        for seed in 0..20 {
            let out = round_offline(&inst, &x, &RoundingParams::offline(seed)).unwrap();
            assert_eq!(out.value(&inst), int(2));
        }
    }

    #[test]
    fn outputs_are_feasible_and_deterministic() {
        let inst = gen_integrality_gap(3, q(1, 10)).unwrap();
        let x = solve_bundle_lp(build_bundle_lp(&inst).unwrap()).unwrap();
        for seed in 0..200 {
            let params = RoundingParams::offline(seed);
            let out = round_offline(&inst, &x, &params).unwrap();
            out.validate(&inst).unwrap();
            assert!(is_feasible(&inst, &out.to_allocation()).unwrap().is_feasible());
            assert_eq!(out, round_offline(&inst, &x, &params).unwrap());
        }
    }

    #[test]
    fn rejects_infeasible_point() {
        let inst = gen_integrality_gap(2, q(1, 10)).unwrap();
        let model = build_bundle_lp(&inst).unwrap();
        let n = model.vars.len();
        let x = BundleLpSolution { model, x: vec![1.0; n], objective: 0.0, exact_objective: None };
        assert!(matches!(
            round_offline(&inst, &x, &RoundingParams::offline(0)),
            Err(AvaError::InfeasibleFractional(_))
        ));
    }
}
