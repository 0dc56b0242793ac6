//! Named instance families and seeded random instances.
//!
//! All buyers have `rho = 1` unless stated otherwise. Generators are pure
//! functions of their parameters (and seed).

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AvaError, Result};
use crate::iid::IidModel;
use crate::model::{BuyerId, Instance, InstanceBuilder, ItemId};
use crate::rational::{self, int, q, Rational};

fn unit_buyers(b: &mut InstanceBuilder, n: usize, prefix: &str) -> Vec<BuyerId> {
    (1..=n).map(|k| b.add_buyer(format!("{prefix}{k}"), Rational::one())).collect()
}

/// One P-item worth `1 + n*eps` to all `n` buyers, and `n` N-items, the
/// `k`-th worth `1 - eps` to buyer `k` only.
fn p_star(n: usize, eps: Rational) -> Result<Instance> {
    if n == 0 {
        return Err(AvaError::Validation("n must be at least 1".into()));
    }
    let nr = int(n as i128);
    if eps <= Rational::zero() || eps * nr >= Rational::one() {
        return Err(AvaError::BadEps(format!("need 0 < eps < 1/{n}, got {}", rational::display(&eps))));
    }
    let mut b = InstanceBuilder::new();
    let buyers = unit_buyers(&mut b, n, "b");
    let p = b.add_item("p");
    for &j in &buyers {
        b.set_value(p, j, Rational::one() + nr * eps);
    }
    for (k, &j) in buyers.iter().enumerate() {
        let i = b.add_item(format!("n{}", k + 1));
        b.set_value(i, j, Rational::one() - eps);
    }
    b.build()
}

/// The naive-LP integrality gap family.
pub fn gen_integrality_gap(n: usize, eps: Rational) -> Result<Instance> {
    p_star(n, eps)
}

/// The super-linear supply family; same shape as the gap family with `k` buyers.
pub fn gen_supply_example(k: usize, eps: Rational) -> Result<Instance> {
    p_star(k, eps)
}

/// Single unit-rho buyer with `1/eps` N-items worth `1 - eps` and
/// `1/(eps (1 - eps))` P-items worth `1 + eps (1 - eps)`. Non-integral counts
/// are rounded down and recorded as a note.
pub fn gen_tightness_example(eps: Rational) -> Result<Instance> {
    if eps <= Rational::zero() || eps >= Rational::one() {
        return Err(AvaError::BadEps(format!("need 0 < eps < 1, got {}", rational::display(&eps))));
    }
    let one = Rational::one();
    let n_exact = one / eps;
    let p_exact = one / (eps * (one - eps));
    let mut b = InstanceBuilder::new();
    let j = b.add_buyer("b", one);
    for (what, exact) in [("N-item", n_exact), ("P-item", p_exact)] {
        if !exact.is_integer() {
            b.note(format!(
                "{what} count {} rounded down to {}",
                rational::display(&exact),
                exact.floor().to_integer()
            ));
        }
    }
    for k in 0..p_exact.floor().to_integer() {
        let i = b.add_item(format!("p{}", k + 1));
        b.set_value(i, j, one + eps * (one - eps));
    }
    for k in 0..n_exact.floor().to_integer() {
        let i = b.add_item(format!("n{}", k + 1));
        b.set_value(i, j, one - eps);
    }
    b.build()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetSystem {
    pub n_elements: usize,
    pub sets: Vec<Vec<usize>>,
}

/// Max-Coverage reduction: one buyer per set, `k` choice items worth
/// `1 + (eps/2) n/k` to every buyer, one element item per element worth
/// `1 - eps/2` to the buyers whose set contains it.
pub fn gen_max_coverage(system: &SetSystem, k: usize, eps: Rational) -> Result<Instance> {
    let n = system.n_elements;
    if k == 0 || !n.is_multiple_of(k) {
        return Err(AvaError::Validation(format!("k = {k} must divide n = {n}")));
    }
    if eps <= Rational::zero() || eps >= Rational::one() {
        return Err(AvaError::BadEps(format!("need 0 < eps < 1, got {}", rational::display(&eps))));
    }
    for s in &system.sets {
        let mut sorted = s.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != n / k || sorted.iter().any(|&e| e >= n) {
            return Err(AvaError::Validation(format!("set {s:?} is not a balanced subset of size {}", n / k)));
        }
    }
    let mut b = InstanceBuilder::new();
    let buyers = unit_buyers(&mut b, system.sets.len(), "S");
    let half = eps / int(2);
    let choice = Rational::one() + half * int((n / k) as i128);
    for c in 0..k {
        let i = b.add_item(format!("c{}", c + 1));
        for &j in &buyers {
            b.set_value(i, j, choice);
        }
    }
    for e in 0..n {
        let i = b.add_item(format!("e{e}"));
        for (s, set) in system.sets.iter().enumerate() {
            if set.contains(&e) {
                b.set_value(i, buyers[s], Rational::one() - half);
            }
        }
    }
    b.build()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Graph> {
        let mut seen = std::collections::BTreeSet::new();
        for &(u, v) in &edges {
            if u >= n || v >= n || u == v {
                return Err(AvaError::Validation(format!("bad edge ({u}, {v})")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(AvaError::Validation(format!("repeated edge ({u}, {v})")));
            }
        }
        Ok(Graph { n, edges })
    }

    pub fn complete(n: usize) -> Graph {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Graph { n, edges }
    }

    pub fn path(n: usize) -> Graph {
        Graph { n, edges: (1..n).map(|v| (v - 1, v)).collect() }
    }

    pub fn cycle(n: usize) -> Graph {
        let mut g = Graph::path(n);
        if n > 2 {
            g.edges.push((n - 1, 0));
        }
        g
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Size of a maximum independent set, by enumeration (small graphs only).
    pub fn independence_number(&self) -> usize {
        assert!(self.n <= 24, "independence_number is exponential");
        (0u32..1 << self.n)
            .filter(|mask| self.edges.iter().all(|&(u, v)| mask & (1 << u) == 0 || mask & (1 << v) == 0))
            .map(|mask| mask.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }
}

/// `M = 2|E| / n^eps`, exact when `eps` is 0 or 1.
pub fn clique_m(graph: &Graph, eps: f64) -> Result<Rational> {
    let e = int(graph.edges.len() as i128);
    if eps == 1.0 {
        Ok(e * int(2) / int(graph.n as i128))
    } else if eps == 0.0 {
        Ok(e * int(2))
    } else {
        rational::from_f64(2.0 * graph.edges.len() as f64 / (graph.n as f64).powf(eps))
    }
}

fn vertex_edge_instance(graph: &Graph, m: Rational, edge_weight: Rational) -> Result<Instance> {
    let mut b = InstanceBuilder::new();
    let buyers: Vec<BuyerId> = (0..graph.n).map(|v| b.add_buyer(format!("v{v}"), Rational::one())).collect();
    for v in 0..graph.n {
        let i = b.add_item(format!("vertex{v}"));
        b.set_value(i, buyers[v], m);
        b.set_cost(i, buyers[v], m + edge_weight * int(graph.degree(v) as i128));
    }
    for &(u, v) in &graph.edges {
        let i = b.add_item(format!("edge{u}-{v}"));
        for w in [u, v] {
            b.set_value(i, buyers[w], Rational::one());
            b.set_cost(i, buyers[w], Rational::zero());
        }
    }
    b.build()
}

/// Independent-set reduction to GenAVA: vertex items worth `M` at cost
/// `M + deg(v)` to their own buyer, edge items worth 1 at cost 0 to both
/// endpoint buyers.
pub fn gen_genava_clique(graph: &Graph, eps: f64) -> Result<Instance> {
    if graph.edges.is_empty() {
        return Err(AvaError::Validation("graph has no edges, so M = 0".into()));
    }
    vertex_edge_instance(graph, clique_m(graph, eps)?, Rational::one())
}

/// Bicriteria hardness instance on a `d`-regular graph: `M = d^2` and the
/// returned `eps = 1/(M + d + 1)`.
pub fn gen_bicriteria(graph: &Graph) -> Result<(Instance, Rational)> {
    let d = graph.degree(0);
    if d == 0 || (0..graph.n).any(|v| graph.degree(v) != d) {
        return Err(AvaError::Validation("graph must be d-regular with d >= 1".into()));
    }
    let d = int(d as i128);
    let m = d * d;
    let inst = vertex_edge_instance(graph, m, Rational::one())?;
    Ok((inst, Rational::one() / (m + d + Rational::one())))
}

/// I.i.d. GenAVA variant: vertex items cost `M + R deg(v)`, vertex types
/// arrive w.p. `1/(2|V|)`, edge types w.p. `1/(2|E|)`, and the horizon is
/// `ceil(2 (1 + eps/2) R |E|)`.
pub fn gen_iid_genava(graph: &Graph, m: Rational, r: u32, eps: Rational) -> Result<IidModel> {
    if graph.edges.is_empty() || graph.n == 0 {
        return Err(AvaError::Validation("graph needs vertices and edges".into()));
    }
    if r == 0 || m <= Rational::zero() {
        return Err(AvaError::Validation("need R >= 1 and M > 0".into()));
    }
    let types = vertex_edge_instance(graph, m, int(r as i128))?;
    let nv = int(graph.n as i128);
    let ne = int(graph.edges.len() as i128);
    let half = q(1, 2);
    let probs = (0..graph.n).map(|_| half / nv).chain(graph.edges.iter().map(|_| half / ne)).collect();
    let horizon = (int(2) * (Rational::one() + eps / int(2)) * int(r as i128) * ne).ceil().to_integer();
    IidModel::new(types, probs, horizon as usize)
}

/// The i.i.d. lower-bound model: `T` buyers, `T - 1` N-types worth `1 - 1/T`
/// to a distinct buyer each, one P-type worth 2 to everyone, uniform
/// probabilities and horizon `T`.
pub fn gen_iid_lower_bound(t: usize) -> Result<IidModel> {
    if t < 2 {
        return Err(AvaError::Validation("T must be at least 2".into()));
    }
    let tr = int(t as i128);
    let eps = Rational::one() / tr;
    let mut b = InstanceBuilder::new();
    let buyers = unit_buyers(&mut b, t, "b");
    for k in 0..t - 1 {
        let i = b.add_item(format!("n{}", k + 1));
        b.set_value(i, buyers[k], Rational::one() - eps);
    }
    let p = b.add_item("p");
    for &j in &buyers {
        b.set_value(p, j, Rational::one() + eps * tr);
    }
    IidModel::new(b.build()?, vec![eps; t], t)
}

/// Adversarial order: `T - 1` items worth `1 - eps` to all `T` buyers, then
/// one item worth `1 + eps T` to the last buyer only.
pub fn gen_adversarial_t(t: usize, eps: Rational) -> Result<(Instance, Vec<ItemId>)> {
    if t < 2 {
        return Err(AvaError::Validation("T must be at least 2".into()));
    }
    if eps <= Rational::zero() || eps >= Rational::one() {
        return Err(AvaError::BadEps(format!("need 0 < eps < 1, got {}", rational::display(&eps))));
    }
    let mut b = InstanceBuilder::new();
    let buyers = unit_buyers(&mut b, t, "b");
    let mut order = Vec::new();
    for k in 0..t - 1 {
        let i = b.add_item(format!("a{}", k + 1));
        for &j in &buyers {
            b.set_value(i, j, Rational::one() - eps);
        }
        order.push(i);
    }
    let last = b.add_item("last");
    b.set_value(last, buyers[t - 1], Rational::one() + eps * int(t as i128));
    order.push(last);
    Ok((b.build()?, order))
}

/// Parameters of [`gen_random`]. Values are multiples of 0.01.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomParams {
    pub n_items: usize,
    pub n_buyers: usize,
    /// Probability that an item-buyer pair is an edge.
    pub edge_density: f64,
    /// Probability that an edge (or, if `unambiguous`, an item) is P.
    pub p_density: f64,
    /// N-edge values are drawn from `[n_low, 0.99]`.
    pub n_low: f64,
    /// P-edge values are drawn from `[1, p_high]`.
    pub p_high: f64,
    pub unambiguous: bool,
    pub seed: u64,
}

impl RandomParams {
    pub fn new(n_items: usize, n_buyers: usize, seed: u64) -> Self {
        RandomParams {
            n_items,
            n_buyers,
            edge_density: 0.6,
            p_density: 0.35,
            n_low: 0.5,
            p_high: 2.0,
            unambiguous: true,
            seed,
        }
    }
}

fn cents<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Rational {
    let lo = (lo * 100.0).round() as i128;
    let hi = (hi * 100.0).round() as i128;
    q(rng.gen_range(lo..=hi.max(lo)), 100)
}

/// Unit-rho random instance; every item gets at least one edge.
pub fn gen_random(params: &RandomParams) -> Result<Instance> {
    if params.n_buyers == 0 {
        return Err(AvaError::Validation("need at least one buyer".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut b = InstanceBuilder::new();
    let buyers = unit_buyers(&mut b, params.n_buyers, "b");
    for k in 0..params.n_items {
        let i = b.add_item(format!("i{}", k + 1));
        let item_is_p = rng.gen_bool(params.p_density);
        let mut adj: Vec<BuyerId> = buyers.iter().copied().filter(|_| rng.gen_bool(params.edge_density)).collect();
        if adj.is_empty() {
            adj.push(*buyers.choose(&mut rng).expect("buyers"));
        }
        for j in adj {
            let is_p = if params.unambiguous { item_is_p } else { rng.gen_bool(params.p_density) };
            let v = if is_p { cents(&mut rng, 1.0, params.p_high) } else { cents(&mut rng, params.n_low, 0.99) };
            b.set_value(i, j, v);
        }
    }
    b.build()
}

/// Random GenAVA instance with values and costs in `[0.1, 2]`.
pub fn gen_random_genava(n_items: usize, n_buyers: usize, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = InstanceBuilder::new();
    let buyers = unit_buyers(&mut b, n_buyers, "b");
    for k in 0..n_items {
        let i = b.add_item(format!("i{}", k + 1));
        for &j in &buyers {
            if rng.gen_bool(0.6) {
                b.set_value(i, j, cents(&mut rng, 0.1, 2.0));
                b.set_cost(i, j, cents(&mut rng, 0.1, 2.0));
            }
        }
    }
    b.build()
}

/// Unambiguous random instance with one budget resource. Every resource cost
/// lies in `[0.4, 1] * frac * B_j`, and each buyer's P-items together use at
/// most half its budget.
pub fn gen_small_bids(params: &RandomParams, frac: Rational) -> Result<Instance> {
    let base = gen_random(&RandomParams { unambiguous: true, ..params.clone() })?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x5eed_b1d5);
    let mut b = base.to_builder();
    let r = b.add_resource("budget");
    let budget = int(100);
    let top = (frac * budget).floor().to_integer();
    let low = (int(2) * top / int(5)).ceil().to_integer().max(1);
    let mut p_spend = vec![Rational::zero(); base.n_buyers()];
    for j in base.buyer_ids() {
        b.set_budget(r, j, budget);
    }
    for i in base.items() {
        for e in base.edges(i) {
            let mut c = int(rng.gen_range(low..=top.max(low)));
            if base.class(i, e.buyer) == Some(crate::model::EdgeClass::P) {
                let room = budget / int(2) - p_spend[e.buyer.0];
                if c > room {
                    c = room.max(Rational::zero());
                }
                p_spend[e.buyer.0] += c;
            }
            b.set_resource_cost(r, i, e.buyer, c);
        }
    }
    b.build()
}

/// Parameters of [`gen_random_iid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomIidParams {
    pub n_types: usize,
    pub n_buyers: usize,
    pub horizon: usize,
    pub seed: u64,
}

/// Random model where every type has an integral number `c_i >= 1` of
/// expected arrivals (`q_i = c_i / T`), so the arrival floor is at least 1.
/// Types may mix P-edges and N-edges.
pub fn gen_random_iid(params: &RandomIidParams) -> Result<IidModel> {
    if params.n_types == 0 || params.horizon < params.n_types.max(2) {
        return Err(AvaError::Validation("need 1 <= types <= T and T >= 2".into()));
    }
    let inst = gen_random(&RandomParams {
        unambiguous: false,
        p_density: 0.4,
        ..RandomParams::new(params.n_types, params.n_buyers, params.seed)
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(1));
    let mut counts = vec![1usize; params.n_types];
    for _ in params.n_types..params.horizon {
        counts[rng.gen_range(0..params.n_types)] += 1;
    }
    let t = params.horizon as i128;
    IidModel::new(inst, counts.into_iter().map(|c| q(c as i128, t)).collect(), params.horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ItemKind;

    #[test]
    fn gap_family_shape() {
        let inst = gen_integrality_gap(3, q(1, 10)).unwrap();
        assert_eq!((inst.n_items(), inst.n_buyers()), (4, 3));
        assert_eq!(inst.edge_counts(), (3, 3));
        assert!(gen_integrality_gap(3, q(1, 2)).is_err());
        assert_eq!(gen_integrality_gap(1, q(1, 2)).unwrap().n_items(), 2);
    }

    #[test]
    fn tightness_counts() {
        let inst = gen_tightness_example(q(1, 2)).unwrap();
        assert_eq!(inst.p_items().len(), 4);
        assert_eq!(inst.n_items_list().len(), 2);
        assert!(inst.notes().is_empty());
        let inst = gen_tightness_example(q(1, 4)).unwrap();
        assert_eq!(inst.p_items().len(), 5);
        assert_eq!(inst.notes().len(), 1);
    }

    #[test]
    fn max_coverage_shape() {
        let sys = SetSystem { n_elements: 4, sets: vec![vec![0, 1], vec![2, 3]] };
        let inst = gen_max_coverage(&sys, 2, q(1, 10)).unwrap();
        assert_eq!((inst.n_items(), inst.n_buyers()), (6, 2));
        let bad = SetSystem { n_elements: 4, sets: vec![vec![0, 1, 2], vec![3]] };
        assert!(gen_max_coverage(&bad, 2, q(1, 10)).is_err());
    }

    #[test]
    fn clique_instance_costs() {
        let inst = gen_genava_clique(&Graph::complete(3), 1.0).unwrap();
        assert!(inst.is_genava());
        assert_eq!(inst.n_items(), 6);
        let v0 = inst.item_by_name("vertex0").unwrap();
        assert_eq!(inst.edge(v0, BuyerId(0)).unwrap().cost, int(4));
        assert!(gen_genava_clique(&Graph::new(3, vec![]).unwrap(), 1.0).is_err());
        assert_eq!(Graph::path(3).independence_number(), 2);
    }

    #[test]
    fn iid_lower_bound_shape() {
        let m = gen_iid_lower_bound(10).unwrap();
        assert_eq!(m.n_types(), 10);
        assert_eq!(m.probs().iter().sum::<Rational>(), Rational::one());
        let p = m.types().item_by_name("p").unwrap();
        assert_eq!(m.types().value(p, BuyerId(3)), int(2));
    }

    #[test]
    fn random_is_deterministic_and_unambiguous() {
        let p = RandomParams::new(8, 3, 42);
        let a = gen_random(&p).unwrap();
        assert_eq!(a, gen_random(&p).unwrap());
        assert!(a.is_unambiguous());
        assert!(a.items().all(|i| a.item_kind(i) != ItemKind::Isolated));
    }

    #[test]
    fn random_iid_has_unit_floor() {
        let m = gen_random_iid(&RandomIidParams { n_types: 5, n_buyers: 3, horizon: 20, seed: 7 }).unwrap();
        assert!(m.types().items().all(|i| m.expected_arrivals(i) >= Rational::one()));
    }

    #[test]
    fn small_bids_respect_shape() {
        let inst = gen_small_bids(&RandomParams::new(12, 2, 5), q(1, 20)).unwrap();
        let res = &inst.resources()[0];
        for i in inst.items() {
            for e in inst.edges(i) {
                assert!(res.cost(i, e.buyer) <= int(5));
            }
        }
    }
}
