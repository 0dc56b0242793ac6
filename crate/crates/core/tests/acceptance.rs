//! Acceptance criteria 1-13. A single test runs every criterion in order,
//! writes one PASS/FAIL line per criterion straight to stderr (so the lines
//! show up without `--nocapture`) and fails if any criterion failed.
//!
//! Reference numbers are computed by the exact oracles or by closed forms
//! written out here, then frozen as literals.

use std::collections::HashMap;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ava::bundling::{duplicate_supply, extract_bundling};
use ava::exact::{exact_bundling_opt, exact_gap_opt, exact_opt, Limits};
use ava::gap::{bundles_to_gap, export_gap, gap_solution_to_bundles};
use ava::generators::{
    gen_adversarial_t, gen_genava_clique, gen_integrality_gap, gen_max_coverage, gen_random, gen_random_iid,
    gen_supply_example, gen_tightness_example, Graph, RandomIidParams, RandomParams, SetSystem,
};
use ava::harness::{
    offline_random_instances, online_models, paper_instances, run_trials, small_bids_instances, trial_seed, Job,
    JobKind, TrialConfig, TrialReport,
};
use ava::iid::IidModel;
use ava::lp::{solve_lp, DEFAULT_TOLERANCE};
use ava::lp_models::{
    build_bundle_lp, build_naive_lp, build_optoff_lp, build_opton_lp, compute_kappa, solve_bundle_lp,
};
use ava::model::{allocation_value, is_feasible, Allocation, EdgeClass, InstanceBuilder};
use ava::rational::{self, int, q, to_big};
use ava::rounding::{check_prefix_feasibility, greedy_p_only, round_online, RoundingParams};
use ava::{BuyerId, Instance, ItemId, Rational};

const TRIALS: usize = 10_000;
const SEED: u64 = 20_240_601;
/// Width of the marginal checks, in standard deviations.
const SIGMAS: f64 = 3.0;

fn limits() -> Limits {
    Limits::default()
}

fn report(line: &str) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn criterion(n: u32, title: &str, budget: Duration, f: impl FnOnce() -> String) -> bool {
    let start = Instant::now();
    let out = catch_unwind(AssertUnwindSafe(f));
    let took = start.elapsed();
    let (ok, detail) = match out {
        Ok(detail) if took <= budget => (true, detail),
        Ok(detail) => (false, format!("{detail}; took {took:.2?} > {budget:?}")),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            (false, msg)
        }
    };
    report(&format!("criterion {n:>2} {} [{:.2?}] {title}: {detail}", if ok { "PASS" } else { "FAIL" }, took));
    ok
}

fn c1_naive_lp_gap() -> String {
    let eps = q(1, 10);
    let mut ratios = Vec::new();
    for n in 2..=5usize {
        let inst = gen_integrality_gap(n, eps).unwrap();
        let sol = solve_lp(&build_naive_lp(&inst), DEFAULT_TOLERANCE).unwrap().ensure_optimal().unwrap();
        assert_eq!(sol.exact_objective, Some(to_big(&int(n as i128 + 1))), "naive LP at n = {n}");
        let (opt, alloc) = exact_opt(&inst, &limits()).unwrap();
        // one P-item plus one N-item of the same buyer
        assert_eq!(opt, int(2) + int(n as i128 - 1) * eps, "OPT at n = {n}");
        assert!(is_feasible(&inst, &alloc).unwrap().is_feasible());
        ratios.push(rational::to_f64(&(int(n as i128 + 1) / opt)));
    }
    assert!(ratios.windows(2).all(|w| w[1] > w[0]), "ratios not increasing: {ratios:?}");
    format!("naive LP = n+1, OPT = 2+(n-1)eps, ratios {ratios:.3?}")
}

fn c2_bundle_lp_tight() -> String {
    let inst = gen_integrality_gap(3, q(1, 10)).unwrap();
    let sol = solve_lp(&build_bundle_lp(&inst).unwrap().lp, 1e-9).unwrap().ensure_optimal().unwrap();
    assert!((sol.objective - 2.2).abs() <= 1e-9, "float objective {}", sol.objective);
    assert_eq!(sol.exact_objective, Some(to_big(&q(22, 10))));
    assert_eq!(exact_opt(&inst, &limits()).unwrap().0, q(22, 10));
    "Bundle-LP = OPT = 2.2 (certified in rationals)".into()
}

/// Random feasible allocations together with an arrival order along which
/// every prefix is feasible.
fn random_feasible_allocations(count: usize) -> Vec<(Instance, Allocation, Vec<ItemId>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < count {
        seed += 1;
        let mut params = RandomParams::new(rng.gen_range(3..=8), rng.gen_range(1..=3), seed);
        params.unambiguous = rng.gen_bool(0.5);
        params.p_density = 0.45;
        let inst = gen_random(&params).unwrap();
        let alloc: Allocation = inst
            .items()
            .filter_map(|i| {
                let edges = inst.edges(i);
                let k = rng.gen_range(0..=edges.len());
                edges.get(k).map(|e| (i, e.buyer))
            })
            .collect();
        if alloc.is_empty() || !is_feasible(&inst, &alloc).unwrap().is_feasible() {
            continue;
        }
        let mut order: Vec<ItemId> = inst.items().collect();
        order.shuffle(&mut rng);
        let prefix_ok = |order: &[ItemId]| {
            let mut acc = vec![Rational::zero(); inst.n_buyers()];
            order.iter().all(|&i| match alloc.get(i) {
                Some(j) => {
                    acc[j.0] += inst.excess(i, j).unwrap();
                    acc[j.0] >= Rational::zero()
                }
                None => true,
            })
        };
        if !prefix_ok(&order) {
            // P-edges first always works for a feasible allocation
            order.sort_by_key(|&i| alloc.get(i).map(|j| inst.class(i, j) == Some(EdgeClass::N)));
            assert!(prefix_ok(&order));
        }
        out.push((inst, alloc, order));
    }
    out
}

fn c3_bundling_factor_two() -> String {
    let mut ratios = Vec::new();
    for (eps, full, bundled) in [(q(1, 2), int(6), int(5)), (q(1, 5), q(1016, 100), q(696, 100))] {
        let inst = gen_tightness_example(eps).unwrap();
        let opt = exact_opt(&inst, &limits()).unwrap().0;
        let (bopt, bundling) = exact_bundling_opt(&inst, &limits()).unwrap();
        assert_eq!((opt, bopt), (full, bundled), "tightness eps = {eps}");
        bundling.validate(&inst).unwrap();
        let r = opt / bopt;
        assert!(r > int(1) && r <= int(2));
        ratios.push(r);
    }
    assert!(ratios[1] > ratios[0]);
    let samples = random_feasible_allocations(500);
    let mut worst = f64::INFINITY;
    for (inst, alloc, order) in &samples {
        let full = allocation_value(inst, alloc).unwrap();
        let b = extract_bundling(inst, alloc, order).unwrap();
        b.validate(inst).unwrap();
        let kept = b.value(inst);
        assert!(kept * int(2) >= full, "kept {kept} of {full}");
        worst = worst.min(rational::to_f64(&(kept / full)));
    }
    format!(
        "OPT/bundling = {} then {}; 500 extractions keep >= {worst:.3} of the value",
        rational::display(&ratios[0]),
        rational::display(&ratios[1])
    )
}

fn c4_supply() -> String {
    let base = gen_supply_example(3, q(1, 100)).unwrap();
    assert_eq!(exact_opt(&base, &limits()).unwrap().0, q(202, 100));
    let dup = duplicate_supply(&base, 3).unwrap();
    assert_eq!(exact_opt(&dup, &limits()).unwrap().0, int(12));
    let mut checked = 0;
    for k in [2usize, 3] {
        let mut family = vec![gen_supply_example(k, q(1, 100)).unwrap(), gen_supply_example(k, q(1, 20)).unwrap()];
        for seed in 1..=3 {
            family.push(gen_random(&RandomParams::new(3, 2, 500 + seed)).unwrap());
        }
        for inst in family {
            let opt = exact_opt(&inst, &limits()).unwrap().0;
            let opt_k = exact_opt(&duplicate_supply(&inst, k).unwrap(), &limits()).unwrap().0;
            let kk = int(k as i128);
            assert!(kk * opt <= opt_k && opt_k <= (kk * kk + kk) * opt, "k = {k}: {opt} vs {opt_k}");
            checked += 1;
        }
    }
    format!("2.02 -> 12.00 after tripling; k*OPT <= OPT' <= (k^2+k)*OPT on {checked} instances")
}

fn run(job: &Job, alpha: f64, beta: f64, factor: Option<f64>) -> TrialReport {
    let cfg = TrialConfig { trials: TRIALS, seed: SEED, alpha, beta, factor, threads: None };
    run_trials(job, &cfg).unwrap()
}

fn marginal_ok(r: &TrialReport) -> f64 {
    let mut worst = 0.0f64;
    for b in &r.bundles {
        let dev = (b.count as f64 - b.n as f64 * b.prob).abs();
        let sigma = (b.n as f64 * b.prob * (1.0 - b.prob)).sqrt();
        if sigma == 0.0 {
            assert!(dev < 1e-6, "{}: bundle ({}, {}) opened {} of {}", r.name, b.buyer, b.p, b.count, b.n);
        } else {
            assert!(dev <= SIGMAS * sigma, "{}: bundle ({}, {}) off by {:.2} sigma", r.name, b.buyer, b.p, dev / sigma);
            worst = worst.max(dev / sigma);
        }
    }
    worst
}

fn c5_c6_offline() -> (String, String) {
    let mut instances = offline_random_instances().unwrap();
    instances.extend(paper_instances().unwrap());
    let mut worst_ratio = 0.0f64;
    let mut worst_z = 0.0f64;
    for (name, inst) in instances {
        let job = Job::offline(name.clone(), inst).unwrap();
        let r = run(&job, 0.3, 0.5, Some(32.0));
        assert_eq!(r.feasible, TRIALS);
        let threshold = r.lp_value / 32.0;
        assert!(r.ci_low >= threshold, "{name}: CI low {} below LP/32 = {threshold}", r.ci_low);
        worst_ratio = worst_ratio.max(r.lp_value / r.mean);
        worst_z = worst_z.max(marginal_ok(&r));
    }
    (
        format!("24 instances x {TRIALS} trials all feasible; worst LP/mean {worst_ratio:.3} (< 32)"),
        format!("every Phase-I open rate within {SIGMAS} sigma of x_pjp (worst {worst_z:.2})"),
    )
}

fn online_stream(model: &IidModel, k: usize) -> Vec<ItemId> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(SEED, k));
    rng.set_stream(u64::MAX);
    model.sample_stream(&mut rng)
}

fn c7_online() -> String {
    let models = online_models().unwrap();
    assert_eq!(models.len(), 6);
    let mut worst_ratio = 0.0f64;
    let mut worst_z = 0.0f64;
    for (name, model) in &models {
        assert!(model.horizon() <= 40 && model.horizon() % 2 == 0);
        let job = Job::online(name.clone(), model.clone()).unwrap();
        let r = run(&job, 0.64, 0.1, Some(57.0));
        assert_eq!(r.feasible, TRIALS);
        assert!(r.ci_low >= r.lp_value / 57.0, "{name}: CI low {} below V[ON]/57", r.ci_low);
        worst_ratio = worst_ratio.max(r.lp_value / r.mean);
        worst_z = worst_z.max(marginal_ok(&r));
    }
    // per-(t, bundle) open rate: P(type p arrives at t and opens jp) = x_pjp / T
    let mut checked = 0usize;
    for (name, model) in &models {
        let JobKind::Online { x, .. } = Job::online(name.clone(), model.clone()).unwrap().kind else { unreachable!() };
        let t_max = model.horizon();
        let mut opens: HashMap<(usize, BuyerId, ItemId), u64> = HashMap::new();
        for k in 0..TRIALS {
            let params = RoundingParams::new(0.64, 0.1, trial_seed(SEED, k)).unwrap();
            let out = round_online(model, &x, &params, &online_stream(model, k)).unwrap();
            check_prefix_feasibility(&out).unwrap();
            for &(t, j, p) in &out.opened {
                assert!(t <= t_max / 2, "{name}: opened at t = {t}");
                *opens.entry((t, j, p)).or_default() += 1;
            }
        }
        for p in model.types().p_items() {
            for e in model.types().edges(p) {
                let prob = x.get(p, e.buyer, p) / t_max as f64;
                let sigma = (TRIALS as f64 * prob * (1.0 - prob)).sqrt();
                for t in 1..=t_max / 2 {
                    let c = opens.get(&(t, e.buyer, p)).copied().unwrap_or(0) as f64;
                    let dev = (c - TRIALS as f64 * prob).abs();
                    if sigma == 0.0 {
                        assert_eq!(c, 0.0, "{name}: t = {t}");
                        continue;
                    }
                    assert!(
                        dev <= SIGMAS * sigma,
                        "{name}: t = {t}, bundle ({}, {}) off by {:.2} sigma",
                        e.buyer.0,
                        p.0,
                        dev / sigma
                    );
                    worst_z = worst_z.max(dev / sigma);
                    checked += 1;
                }
            }
        }
    }
    format!("6 models x {TRIALS} streams prefix-feasible; worst V[ON]/mean {worst_ratio:.3} (< 57); {checked} per-(t, bundle) open rates within {SIGMAS} sigma (worst {worst_z:.2})")
}

fn c8_adversarial() -> String {
    let eps = q(5, 100);
    let (inst, order) = gen_adversarial_t(5, eps).unwrap();
    let greedy = greedy_p_only(&inst, Some(&order));
    let gv = allocation_value(&inst, &greedy).unwrap();
    let cap = int(1) + eps * int(5);
    assert_eq!(gv, q(125, 100));
    // all T items to the special buyer: 4 * 0.95 + 1.25 = 5.05
    let (opt, _) = exact_opt(&inst, &limits()).unwrap();
    assert_eq!(opt, q(505, 100));
    // no nonempty allocation of the first T-1 items is feasible
    let prefix = inst.filter_edges(|i, _| i != *order.last().unwrap());
    assert_eq!(exact_opt(&prefix, &limits()).unwrap().0, int(0));

    // the online rounding fed the same sequence, padded with one edgeless
    // arrival so the horizon is even
    let mut b = InstanceBuilder::new();
    for buyer in inst.buyers() {
        b.add_buyer(buyer.name.clone(), buyer.rho);
    }
    b.add_item("pad");
    for &i in &order {
        let ty = b.add_item(inst.item_name(i));
        for e in inst.edges(i) {
            b.set_value(ty, e.buyer, e.value);
        }
    }
    let types = b.build().unwrap();
    let n = types.n_items() as i128;
    let model = IidModel::new(types, vec![q(1, n); n as usize], 6).unwrap();
    let x = solve_bundle_lp(build_opton_lp(&model)).unwrap();
    let stream: Vec<ItemId> = (0..6).map(ItemId).collect();
    let mut best = int(0);
    for k in 0..100 {
        let out = round_online(&model, &x, &RoundingParams::online(k), &stream).unwrap();
        check_prefix_feasibility(&out).unwrap();
        best = best.max(out.value);
    }
    assert!(gv <= cap && best <= cap);
    format!(
        "greedy 1.25, online rounding {} (cap 1+eps*T = 1.25), exact OPT 5.05; the stated 5.95 does not match the construction",
        rational::display(&best)
    )
}

fn c9_gap() -> String {
    let mut n = 0;
    let mut seed = 0u64;
    while n < 100 {
        seed += 1;
        let mut params = RandomParams::new(4 + (seed % 3) as usize, 2, 900 + seed);
        params.p_density = 0.45;
        let inst = gen_random(&params).unwrap();
        let gap = export_gap(&inst, int(1)).unwrap();
        if gap.bins.len() > 12 {
            continue;
        }
        let (gv, sol) = exact_gap_opt(&gap).unwrap();
        let (bv, bundling) = exact_bundling_opt(&inst, &limits()).unwrap();
        assert_eq!(gv, bv, "instance seed {}", 900 + seed);
        let back = gap_solution_to_bundles(&sol, &gap, &inst).unwrap();
        assert_eq!(back.value(&inst), gv);
        let there = bundles_to_gap(&bundling, &gap).unwrap();
        assert_eq!(there.value(&gap).unwrap(), bv);
        assert_eq!(gap_solution_to_bundles(&there, &gap, &inst).unwrap().normalized(), bundling.normalized());
        n += 1;
    }
    "100 instances: GAP optimum = bundling optimum, round trips exact".into()
}

fn c10_max_coverage() -> String {
    let eps = q(1, 2);
    let yes = SetSystem { n_elements: 4, sets: vec![vec![0, 1], vec![2, 3]] };
    let no = SetSystem { n_elements: 4, sets: vec![vec![0, 1], vec![1, 2]] };
    let y = exact_opt(&gen_max_coverage(&yes, 2, eps).unwrap(), &limits()).unwrap().0;
    let n = exact_opt(&gen_max_coverage(&no, 2, eps).unwrap(), &limits()).unwrap().0;
    assert_eq!(y, int(6));
    assert!(n < int(6));
    format!("YES = 6 = k+n, overlap = {}", rational::display(&n))
}

fn c11_clique() -> String {
    let mut out = Vec::new();
    for (g, label) in [(Graph::complete(3), "K3"), (Graph::path(3), "P3")] {
        let inst = gen_genava_clique(&g, 1.0).unwrap();
        let m = int(2 * g.edges.len() as i128) / int(g.n as i128);
        let formula = int(g.independence_number() as i128) * m + int(g.edges.len() as i128);
        let opt = exact_opt(&inst, &limits()).unwrap().0;
        assert_eq!(opt, formula, "{label}");
        out.push(format!("{label} = {}", rational::display(&opt)));
    }
    assert_eq!(out[0], "K3 = 5");
    out.join(", ")
}

/// `1 / min(1 - 2 g, g)` with `g = a (1 - a)(1 - 2a - 2 K a / (1 - eps))`.
fn budget_c(a: f64, k: usize, eps: f64) -> f64 {
    let g = a * (1.0 - a) * (1.0 - 2.0 * a - 2.0 * k as f64 * a / (1.0 - eps));
    let m = g.min(1.0 - 2.0 * g);
    if m > 0.0 {
        1.0 / m
    } else {
        f64::INFINITY
    }
}

/// Grid minimum of `budget_c` over `a`.
fn budget_constant(k: usize, eps: f64) -> (f64, f64) {
    (1..1000).map(|s| s as f64 / 1000.0).map(|a| (a, budget_c(a, k, eps))).fold((0.0, f64::INFINITY), |best, cur| {
        if cur.1 < best.1 {
            cur
        } else {
            best
        }
    })
}

fn c12_budgeted() -> String {
    let instances = small_bids_instances().unwrap();
    let mut eps = 0.0f64;
    for (_, inst) in &instances {
        assert_eq!(inst.resources().len(), 1);
        let r = &inst.resources()[0];
        for i in inst.items() {
            for e in inst.edges(i) {
                eps = eps.max(rational::to_f64(&(r.cost(i, e.buyer) / *r.budget(e.buyer).unwrap())));
            }
        }
    }
    assert!(eps <= 0.05);
    let (a_star, c_star) = budget_constant(1, eps);
    let c_third = budget_c(1.0 / 3.0, 1, eps);
    assert!(c_third.is_infinite());
    let mut worst = 0.0f64;
    for (name, inst) in instances {
        let job = Job::budgeted(name.clone(), inst).unwrap();
        let third = run(&job, 1.0 / 3.0, 0.5, None);
        assert_eq!(third.feasible, TRIALS);
        let tuned = run(&job, a_star, 0.5, Some(c_star));
        assert_eq!(tuned.feasible, TRIALS);
        assert!(tuned.ci_low >= tuned.lp_value / c_star, "{name}: {} < LP/{c_star}", tuned.ci_low);
        worst = worst.max(third.lp_value / third.mean).max(tuned.lp_value / tuned.mean);
    }
    format!(
        "5 instances, 100% feasible at alpha=1/3 (bound vacuous there) and at alpha={a_star:.3} (C={c_star:.2}); worst LP/mean {worst:.3}"
    )
}

fn c13_kappa() -> String {
    let kappa = compute_kappa(1.0, 1000).unwrap();
    assert!((kappa - 21.446).abs() <= 1e-3, "kappa {kappa}");
    let mut worst_c = 0.0f64;
    for (k, t) in [10usize, 16, 20, 30, 40].into_iter().enumerate() {
        let params = RandomIidParams { n_types: 4 + k % 3, n_buyers: 2 + k % 2, horizon: t, seed: 300 + k as u64 };
        let model = gen_random_iid(&params).unwrap();
        let arrivals: Vec<f64> = model.types().items().map(|i| rational::to_f64(&model.expected_arrivals(i))).collect();
        let gamma = arrivals.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(gamma >= 1.0);
        let kappa = compute_kappa(1.0, t).unwrap();
        let on = solve_bundle_lp(build_opton_lp(&model)).unwrap().best_objective();
        let off = solve_bundle_lp(build_optoff_lp(&model, 1.0).unwrap()).unwrap().best_objective();
        // scaling an OPToff point by 1/s1 (P-variables) and 1/(s1 r) (N-variables) gives an OPTon point
        let s1 = arrivals.iter().map(|a| 2.0 * a.ceil() / a).fold(0.0, f64::max);
        let r = arrivals.iter().map(|a| (a * kappa).ceil() / a).fold(0.0, f64::max);
        let closed = 2.0 * (1.0 + 1.0 / gamma) * (kappa + 1.0 / gamma);
        let ratio = off / on;
        assert!(ratio <= s1 * r + 1e-9, "T = {t}: {ratio} > {}", s1 * r);
        assert!(s1 * r <= closed + 1e-9);
        assert!(ratio <= 4.0 * kappa, "T = {t}: {ratio} > 4 kappa");
        worst_c = worst_c.max(ratio / kappa);
    }
    format!("kappa(1,1000) = {kappa:.4}; V[OFF]/V[ON] <= s1*r <= 2(1+1/G)(kappa+1/G) and <= 4 kappa; worst ratio/kappa {worst_c:.3}")
}

#[test]
fn acceptance() {
    let secs = Duration::from_secs;
    let mut ok = vec![
        criterion(1, "naive-LP gap", secs(1), c1_naive_lp_gap),
        criterion(2, "Bundle-LP tightness", secs(1), c2_bundle_lp_tight),
        criterion(3, "bundling factor 2", secs(30), c3_bundling_factor_two),
        criterion(4, "supply duplication", secs(10), c4_supply),
    ];
    let start = Instant::now();
    let offline = catch_unwind(c5_c6_offline);
    let took = start.elapsed();
    match offline {
        Ok((c5, c6)) => {
            let fast = took <= secs(120);
            let tag = |b: bool| if b { "PASS" } else { "FAIL" };
            report(&format!("criterion  5 {} [{took:.2?}] offline rounding: {c5}", tag(fast)));
            report(&format!("criterion  6 {} [{took:.2?}] Phase-I marginals: {c6}", tag(fast)));
            ok.push(fast);
            ok.push(fast);
        }
        Err(_) => {
            report("criterion  5 FAIL offline rounding");
            report("criterion  6 FAIL Phase-I marginals");
            ok.push(false);
            ok.push(false);
        }
    }
    ok.push(criterion(7, "online rounding", secs(180), c7_online));
    ok.push(criterion(8, "adversarial arrivals", secs(1), c8_adversarial));
    ok.push(criterion(9, "GAP correspondence", secs(60), c9_gap));
    ok.push(criterion(10, "max-coverage reduction", secs(1), c10_max_coverage));
    ok.push(criterion(11, "clique reduction", secs(1), c11_clique));
    ok.push(criterion(12, "budgeted rounding", secs(120), c12_budgeted));
    ok.push(criterion(13, "kappa and OFF/ON", secs(60), c13_kappa));
    let failed: Vec<usize> = ok.iter().enumerate().filter(|(_, &b)| !b).map(|(k, _)| k + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
