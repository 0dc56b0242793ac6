use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use super::{stream_id, uniform, RoundingParams, FRACTIONAL_TOLERANCE};
use crate::bundling::{Bundle, BundledAllocation};
use crate::error::{AvaError, Result};
use crate::iid::IidModel;
use crate::lp_models::BundleLpSolution;
use crate::model::{BuyerId, Instance, ItemId};
use crate::rational::{self, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Reason {
    /// Phase I arrival opened a bundle and heads it.
    #[serde(rename = "opened")]
    Opened,
    /// Phase I arrival drew the leftover probability.
    #[serde(rename = "unopened")]
    Unopened,
    #[serde(rename = "singleton+permissible")]
    SingletonPermissible,
    #[serde(rename = "no-hit")]
    NoHit,
    #[serde(rename = "multi-hit")]
    MultiHit,
    #[serde(rename = "impermissible")]
    Impermissible,
    /// The type has no edge usable in the current phase.
    #[serde(rename = "no-phase")]
    NoPhase,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BundleRef {
    pub buyer: String,
    pub p: String,
    pub opened_at: usize,
}

/// One line of the decision trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Decision {
    pub t: usize,
    pub item: String,
    pub bundle: Option<BundleRef>,
    pub reason: Reason,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serde_json::to_string(self).expect("decision serializes"))
    }
}

#[derive(Clone, Debug)]
pub struct OnlineOutcome {
    /// The realized arrivals, item `t-1` for time `t`.
    pub instance: Instance,
    pub bundling: BundledAllocation,
    pub trace: Vec<Decision>,
    /// Per opened bundle: (time, buyer, type of the head).
    pub opened: Vec<(usize, BuyerId, ItemId)>,
    pub value: Rational,
}

struct OpenCopy {
    t: usize,
    bundle: Bundle,
    residual: Rational,
}

/// Runs the two-phase online rounding over a stream of type indices.
/// Arrivals up to `T/2` may open bundles; later arrivals may only join a
/// bundle through an N-edge.
pub fn round_online(
    model: &IidModel,
    x: &BundleLpSolution,
    params: &RoundingParams,
    stream: &[ItemId],
) -> Result<OnlineOutcome> {
    let horizon = model.horizon();
    if !horizon.is_multiple_of(2) {
        return Err(AvaError::Domain(format!("horizon must be even, got {horizon}")));
    }
    if stream.len() != horizon {
        return Err(AvaError::StreamModelMismatch(format!(
            "stream has {} arrivals, horizon is {horizon}",
            stream.len()
        )));
    }
    let types = model.types();
    if x.model.vars.iter().any(|v| v.item.0 >= types.n_items() || !types.has_edge(v.item, v.buyer)) {
        return Err(AvaError::StreamModelMismatch("LP solution is over different types".into()));
    }
    let viol = x.model.lp.max_violation(&x.x);
    if viol > FRACTIONAL_TOLERANCE {
        return Err(AvaError::InfeasibleFractional(format!("constraint violation {viol:e}")));
    }
    let inst = model.realize(stream)?;
    let half = horizon / 2;
    let t_star = half + 1;
    let mut open: Vec<OpenCopy> = Vec::new();
    let mut trace = Vec::with_capacity(horizon);
    let bundle_ref = |c: &OpenCopy| BundleRef {
        buyer: types.buyer(c.bundle.buyer).name.clone(),
        p: types.item_name(stream[c.t - 1]).to_string(),
        opened_at: c.t,
    };

    for (k, &ty) in stream.iter().enumerate() {
        let t = k + 1;
        let item = ItemId(k);
        let name = types.item_name(ty).to_string();
        let qt = rational::to_f64(&model.expected_arrivals(ty));
        if t <= half {
            let heads: Vec<BuyerId> = x.model.bundles.iter().filter(|b| b.1 == ty).map(|b| b.0).collect();
            if heads.is_empty() {
                trace.push(Decision { t, item: name, bundle: None, reason: Reason::NoPhase });
                continue;
            }
            let u = uniform(params.seed, stream_id(2, t, 0));
            let mut cum = 0.0;
            let mut pick = None;
            for &j in &heads {
                let xp = x.get(ty, j, ty).max(0.0) / qt;
                cum += xp;
                if xp > 0.0 && u < cum {
                    pick = Some(j);
                    break;
                }
            }
            match pick {
                Some(j) => {
                    let copy = OpenCopy {
                        t,
                        bundle: Bundle::singleton(j, item),
                        residual: inst.excess(item, j).expect("edge"),
                    };
                    trace.push(Decision { t, item: name, bundle: Some(bundle_ref(&copy)), reason: Reason::Opened });
                    open.push(copy);
                }
                None => trace.push(Decision { t, item: name, bundle: None, reason: Reason::Unopened }),
            }
            continue;
        }
        let mut candidates = false;
        let mut hits = Vec::new();
        for (o, c) in open.iter().enumerate() {
            let (j, p) = (c.bundle.buyer, stream[c.t - 1]);
            let xi = x.get(ty, j, p).max(0.0);
            if xi <= 0.0 || x.model.var(ty, j, p).is_none_or(|v| x.model.vars[v].is_head()) {
                continue;
            }
            candidates = true;
            let prob = (params.alpha * xi / (x.get(p, j, p) * qt)).min(1.0);
            if uniform(params.seed, stream_id(3, t, o)) < prob {
                hits.push(o);
            }
        }
        let decision = match hits[..] {
            [] if !candidates => Decision { t, item: name, bundle: None, reason: Reason::NoPhase },
            [] => Decision { t, item: name, bundle: None, reason: Reason::NoHit },
            [o] => {
                let c = &mut open[o];
                if c.t >= t_star {
                    return Err(AvaError::PhaseViolation(format!("bundle opened at {} used at {t}", c.t)));
                }
                let after = c.residual + inst.excess(item, c.bundle.buyer).expect("edge");
                if after >= Rational::zero() {
                    c.residual = after;
                    c.bundle.n_items.insert(item);
                    Decision { t, item: name, bundle: Some(bundle_ref(c)), reason: Reason::SingletonPermissible }
                } else {
                    Decision { t, item: name, bundle: Some(bundle_ref(c)), reason: Reason::Impermissible }
                }
            }
            _ => Decision { t, item: name, bundle: None, reason: Reason::MultiHit },
        };
        trace.push(decision);
    }
    let opened = open.iter().map(|c| (c.t, c.bundle.buyer, stream[c.t - 1])).collect();
    let bundling = BundledAllocation::new(open.into_iter().map(|c| c.bundle).collect());
    let value = bundling.value(&inst);
    Ok(OnlineOutcome { instance: inst, bundling, trace, opened, value })
}

/// Replays the allocation in arrival order and checks every buyer's
/// constraint after each arrival; also checks no item is assigned twice.
pub fn check_prefix_feasibility(outcome: &OnlineOutcome) -> Result<()> {
    let inst = &outcome.instance;
    let alloc = outcome.bundling.to_allocation();
    if alloc.len() != outcome.bundling.bundles.iter().map(|b| b.n_items.len() + 1).sum::<usize>() {
        return Err(AvaError::InvalidBundling("an item is assigned twice".into()));
    }
    let mut excess = vec![Rational::zero(); inst.n_buyers()];
    for i in inst.items() {
        if let Some(j) = alloc.get(i) {
            excess[j.0] += inst.excess(i, j).ok_or_else(|| AvaError::UnknownEdge {
                item: inst.item_name(i).to_string(),
                buyer: inst.buyer(j).name.clone(),
            })?;
            if excess[j.0] < Rational::zero() {
                return Err(AvaError::InfeasiblePrefix { buyer: inst.buyer(j).name.clone(), position: i.0 });
            }
        }
    }
    Ok(())
}
