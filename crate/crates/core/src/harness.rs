//! Seeded Monte-Carlo runner for the rounding algorithms and the named
//! benchmark suites.
//!
//! Trial `k` of a run seeded with `s` uses the first word of ChaCha8 stream
//! `k` of seed `s` as its own seed, so results do not depend on scheduling.
//! The confidence interval is `mean +- 1.96 s / sqrt(N)` with `s` the sample
//! standard deviation.

use std::collections::BTreeMap;
use std::io::Write;

use num_traits::Zero;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bundling::BundledAllocation;
use crate::error::{AvaError, Result};
use crate::exact::{exact_bundling_opt, exact_opt, Limits};
use crate::gap::{export_gap, GapInstance};
use crate::generators::{
    gen_adversarial_t, gen_genava_clique, gen_iid_lower_bound, gen_integrality_gap, gen_max_coverage, gen_random,
    gen_random_iid, gen_small_bids, gen_supply_example, gen_tightness_example, Graph, RandomIidParams, RandomParams,
    SetSystem,
};
use crate::iid::IidModel;
use crate::lp::solve_lp;
use crate::lp_models::{
    build_bundle_lp, build_bundle_lp_budgeted, build_naive_lp, build_opton_lp, compute_kappa, solve_bundle_lp,
    BundleLpSolution,
};
use crate::model::{allocation_value, is_feasible, Instance};
use crate::rational::{self, int, q};
use crate::rounding::{
    budgeted_factor, check_prefix_feasibility, gamma_budgeted, gamma_offline, gamma_online, greedy_p_only,
    offline_factor, online_factor, round_offline, round_offline_budgeted, round_online, RoundingParams,
};

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "AVA_SEED";

pub fn default_seed() -> u64 {
    std::env::var(SEED_ENV).ok().and_then(|s| s.parse().ok()).unwrap_or(0)
}

pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng.next_u64()
}

#[derive(Clone, Debug)]
pub enum JobKind {
    Offline { inst: Instance, x: BundleLpSolution },
    Budgeted { inst: Instance, x: BundleLpSolution },
    Online { model: IidModel, x: BundleLpSolution },
}

#[derive(Clone, Debug)]
pub struct Job {
    pub name: String,
    pub kind: JobKind,
}

impl Job {
    /// Solves the Bundle-LP of `inst`.
    pub fn offline(name: impl Into<String>, inst: Instance) -> Result<Job> {
        let x = solve_bundle_lp(build_bundle_lp(&inst)?)?;
        Ok(Job { name: name.into(), kind: JobKind::Offline { inst, x } })
    }

    pub fn budgeted(name: impl Into<String>, inst: Instance) -> Result<Job> {
        let x = solve_bundle_lp(build_bundle_lp_budgeted(&inst)?)?;
        Ok(Job { name: name.into(), kind: JobKind::Budgeted { inst, x } })
    }

    pub fn online(name: impl Into<String>, model: IidModel) -> Result<Job> {
        let x = solve_bundle_lp(build_opton_lp(&model))?;
        Ok(Job { name: name.into(), kind: JobKind::Online { model, x } })
    }

    pub fn lp(&self) -> &BundleLpSolution {
        match &self.kind {
            JobKind::Offline { x, .. } | JobKind::Budgeted { x, .. } | JobKind::Online { x, .. } => x,
        }
    }

    fn kind_name(&self) -> &'static str {
        match self.kind {
            JobKind::Offline { .. } => "offline",
            JobKind::Budgeted { .. } => "budgeted",
            JobKind::Online { .. } => "online",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TrialConfig {
    pub trials: usize,
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    /// Approximation factor to test against; derived from alpha and beta
    /// when absent.
    pub factor: Option<f64>,
    pub threads: Option<usize>,
}

impl TrialConfig {
    pub fn new(trials: usize, seed: u64, params: RoundingParams) -> TrialConfig {
        TrialConfig { trials, seed, alpha: params.alpha, beta: params.beta, factor: None, threads: None }
    }
}

/// Open counts of one bundle `(buyer, p)`: `count` successes out of `n`
/// Bernoulli draws each with probability `prob`.
#[derive(Clone, Debug, Serialize)]
pub struct BundleStat {
    pub buyer: String,
    pub p: String,
    pub n: u64,
    pub prob: f64,
    pub count: u64,
}

impl BundleStat {
    pub fn sigma(&self) -> f64 {
        (self.n as f64 * self.prob * (1.0 - self.prob)).sqrt()
    }

    /// Deviation of `count` from its mean in standard deviations; zero when
    /// both agree exactly.
    pub fn z(&self) -> f64 {
        let dev = self.count as f64 - self.n as f64 * self.prob;
        if dev.abs() < 1e-9 {
            0.0
        } else {
            dev / self.sigma()
        }
    }
}

/// How often N-item `item` ended up in bundle `(buyer, p)` (offline runs).
#[derive(Clone, Debug, Serialize)]
pub struct TripleStat {
    pub item: String,
    pub buyer: String,
    pub p: String,
    pub x: f64,
    pub count: u64,
    /// `rho - v_ij <= beta (v_pj - rho)`
    pub small_deficit: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialReport {
    pub name: String,
    pub kind: String,
    pub trials: usize,
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lp_value: f64,
    pub mean: f64,
    pub std: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub min: f64,
    pub max: f64,
    pub feasible: usize,
    pub ratio: Option<f64>,
    pub factor: Option<f64>,
    pub threshold: Option<f64>,
    /// `ci_low >= threshold`
    pub clears: bool,
    pub bundles: Vec<BundleStat>,
    pub triples: Vec<TripleStat>,
}

struct Trial {
    value: f64,
    /// Model bundle index per opened bundle (copy).
    opened: Vec<usize>,
    /// Model variable index per allocated member.
    members: Vec<usize>,
}

fn bundle_trial(inst: &Instance, x: &BundleLpSolution, out: &BundledAllocation, name: &str, k: usize) -> Result<Trial> {
    out.validate(inst)?;
    if !is_feasible(inst, &out.to_allocation())?.is_feasible() {
        return Err(AvaError::Validation(format!("{name}: trial {k} produced an infeasible allocation")));
    }
    let mut opened = Vec::new();
    let mut members = Vec::new();
    for b in &out.bundles {
        opened.push(x.model.bundles.iter().position(|&(j, p)| j == b.buyer && p == b.p_item).expect("bundle in LP"));
        for &i in &b.n_items {
            members.push(x.model.var(i, b.buyer, b.p_item).expect("member in LP"));
        }
    }
    Ok(Trial { value: rational::to_f64(&out.value(inst)), opened, members })
}

fn run_one(job: &Job, cfg: &TrialConfig, k: usize) -> Result<Trial> {
    let params = RoundingParams::new(cfg.alpha, cfg.beta, trial_seed(cfg.seed, k))?;
    match &job.kind {
        JobKind::Offline { inst, x } => bundle_trial(inst, x, &round_offline(inst, x, &params)?, &job.name, k),
        JobKind::Budgeted { inst, x } => {
            bundle_trial(inst, x, &round_offline_budgeted(inst, x, &params)?, &job.name, k)
        }
        JobKind::Online { model, x } => {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(u64::MAX);
            let stream = model.sample_stream(&mut rng);
            let out = round_online(model, x, &params, &stream)?;
            out.bundling.validate(&out.instance)?;
            check_prefix_feasibility(&out)
                .map_err(|e| AvaError::Validation(format!("{}: trial {k}: {e}", job.name)))?;
            let opened = out
                .opened
                .iter()
                .map(|&(_, j, p)| x.model.bundles.iter().position(|&b| b == (j, p)).expect("bundle in LP"))
                .collect();
            let mut members = Vec::new();
            for b in &out.bundling.bundles {
                let p = stream[b.p_item.0];
                for &i in &b.n_items {
                    members.push(x.model.var(stream[i.0], b.buyer, p).expect("member in LP"));
                }
            }
            Ok(Trial { value: rational::to_f64(&out.value), opened, members })
        }
    }
}

fn max_cost_ratio(inst: &Instance) -> f64 {
    let mut worst = 0.0f64;
    for r in inst.resources() {
        for i in inst.items() {
            for e in inst.edges(i) {
                if let Some(b) = r.budget(e.buyer) {
                    if !b.is_zero() {
                        worst = worst.max(rational::to_f64(&(r.cost(i, e.buyer) / *b)));
                    }
                }
            }
        }
    }
    worst
}

/// Runs `cfg.trials` independent roundings of `job`. Any infeasible output
/// is an error.
pub fn run_trials(job: &Job, cfg: &TrialConfig) -> Result<TrialReport> {
    if cfg.trials == 0 {
        return Err(AvaError::Validation("need at least one trial".into()));
    }
    let run = || (0..cfg.trials).into_par_iter().map(|k| run_one(job, cfg, k)).collect::<Result<Vec<Trial>>>();
    let trials = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| AvaError::Validation(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };

    let n = trials.len() as f64;
    let mean = trials.iter().map(|t| t.value).sum::<f64>() / n;
    let var =
        if trials.len() > 1 { trials.iter().map(|t| (t.value - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    let std = var.sqrt();
    let half = 1.96 * std / n.sqrt();
    let x = job.lp();
    let lp_value = x.best_objective();

    let (gamma, derived) = match &job.kind {
        JobKind::Offline { .. } => (gamma_offline(cfg.alpha, cfg.beta), offline_factor(cfg.alpha, cfg.beta)),
        JobKind::Budgeted { inst, .. } => {
            let (k, eps) = (inst.resources().len(), max_cost_ratio(inst));
            (gamma_budgeted(cfg.alpha, cfg.beta, k, eps), budgeted_factor(cfg.alpha, cfg.beta, k, eps))
        }
        JobKind::Online { .. } => (gamma_online(cfg.alpha, cfg.beta), online_factor(cfg.alpha, cfg.beta)),
    };
    let factor = cfg.factor.or(Some(derived)).filter(|f| f.is_finite());
    let threshold = factor.map(|f| lp_value / f);

    let types: &Instance = match &job.kind {
        JobKind::Offline { inst, .. } | JobKind::Budgeted { inst, .. } => inst,
        JobKind::Online { model, .. } => model.types(),
    };
    let mut open_counts = vec![0u64; x.model.bundles.len()];
    let mut member_counts = vec![0u64; x.model.vars.len()];
    for t in &trials {
        for &b in &t.opened {
            open_counts[b] += 1;
        }
        for &v in &t.members {
            member_counts[v] += 1;
        }
    }
    let bundles = x
        .model
        .bundles
        .iter()
        .zip(&open_counts)
        .map(|(&(j, p), &count)| {
            let xp = x.get(p, j, p).max(0.0);
            let (draws, prob) = match &job.kind {
                JobKind::Online { model, .. } => {
                    let t = model.horizon();
                    ((cfg.trials * t / 2) as u64, (xp / t as f64).min(1.0))
                }
                _ => (cfg.trials as u64, xp.min(1.0)),
            };
            BundleStat { buyer: types.buyer(j).name.clone(), p: types.item_name(p).to_string(), n: draws, prob, count }
        })
        .collect();
    let triples = match &job.kind {
        JobKind::Online { .. } => Vec::new(),
        _ => x
            .model
            .vars
            .iter()
            .zip(&member_counts)
            .filter(|(v, _)| !v.is_head())
            .map(|(v, &count)| {
                let rho = types.rho(v.buyer);
                let deficit = rho - types.value(v.item, v.buyer);
                let head = types.value(v.p, v.buyer) - rho;
                TripleStat {
                    item: types.item_name(v.item).to_string(),
                    buyer: types.buyer(v.buyer).name.clone(),
                    p: types.item_name(v.p).to_string(),
                    x: x.get(v.item, v.buyer, v.p),
                    count,
                    small_deficit: rational::to_f64(&deficit) <= cfg.beta * rational::to_f64(&head),
                }
            })
            .collect(),
    };

    Ok(TrialReport {
        name: job.name.clone(),
        kind: job.kind_name().to_string(),
        trials: trials.len(),
        seed: cfg.seed,
        alpha: cfg.alpha,
        beta: cfg.beta,
        gamma,
        lp_value,
        mean,
        std,
        ci_low: mean - half,
        ci_high: mean + half,
        min: trials.iter().map(|t| t.value).fold(f64::INFINITY, f64::min),
        max: trials.iter().map(|t| t.value).fold(f64::NEG_INFINITY, f64::max),
        feasible: trials.len(),
        ratio: (mean > 0.0).then(|| lp_value / mean),
        factor,
        threshold,
        clears: threshold.is_none_or(|th| mean - half >= th),
        bundles,
        triples,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub trials: usize,
    /// Deterministic reference values (LP optima, exact optima, formulas).
    pub numbers: BTreeMap<String, f64>,
    pub runs: Vec<TrialReport>,
}

impl SuiteReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per run with the scalar report fields.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header = [
            "name",
            "kind",
            "trials",
            "seed",
            "alpha",
            "beta",
            "gamma",
            "lp_value",
            "mean",
            "std",
            "ci_low",
            "ci_high",
            "min",
            "max",
            "feasible",
            "ratio",
            "factor",
            "threshold",
            "clears",
        ];
        w.write_record(header).map_err(csv_err)?;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.runs {
            w.write_record([
                r.name.clone(),
                r.kind.clone(),
                r.trials.to_string(),
                r.seed.to_string(),
                r.alpha.to_string(),
                r.beta.to_string(),
                r.gamma.to_string(),
                r.lp_value.to_string(),
                r.mean.to_string(),
                r.std.to_string(),
                r.ci_low.to_string(),
                r.ci_high.to_string(),
                r.min.to_string(),
                r.max.to_string(),
                r.feasible.to_string(),
                opt(r.ratio),
                opt(r.factor),
                opt(r.threshold),
                r.clears.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> AvaError {
    AvaError::Validation(format!("csv: {e}"))
}

pub const SUITES: [&str; 4] = ["paper-examples", "offline-random", "online", "small-bids"];

/// The twenty random unambiguous instances (6 to 8 items) of the offline suite.
pub fn offline_random_instances() -> Result<Vec<(String, Instance)>> {
    (1..=20u64)
        .map(|s| {
            let params = RandomParams::new(6 + (s % 3) as usize, 2 + (s % 2) as usize, s);
            Ok((format!("random-{s}"), gen_random(&params)?))
        })
        .collect()
}

/// The paper's named offline instances used by the rounding suites.
pub fn paper_instances() -> Result<Vec<(String, Instance)>> {
    let yes = SetSystem { n_elements: 4, sets: vec![vec![0, 1], vec![2, 3]] };
    Ok(vec![
        ("integrality-gap-n3".into(), gen_integrality_gap(3, q(1, 10))?),
        ("supply-k3".into(), gen_supply_example(3, q(1, 100))?),
        ("tightness-0.5".into(), gen_tightness_example(q(1, 2))?),
        ("max-coverage-yes".into(), gen_max_coverage(&yes, 2, q(1, 2))?),
    ])
}

/// The lower-bound model at `T = 20` and five random models with even
/// horizons up to 40.
pub fn online_models() -> Result<Vec<(String, IidModel)>> {
    let mut out = vec![("iid-lower-bound-20".to_string(), gen_iid_lower_bound(20)?)];
    for k in 1..=5u64 {
        let params = RandomIidParams {
            n_types: 4 + (k % 3) as usize,
            n_buyers: 2 + (k % 2) as usize,
            horizon: 20 + 4 * k as usize,
            seed: 100 + k,
        };
        out.push((format!("random-iid-{k}"), gen_random_iid(&params)?));
    }
    Ok(out)
}

/// Small-bids instances: 24 items, 2 buyers, one budget, costs at most 5%
/// of the budget.
pub fn small_bids_instances() -> Result<Vec<(String, Instance)>> {
    (1..=5u64)
        .map(|s| Ok((format!("small-bids-{s}"), gen_small_bids(&RandomParams::new(24, 2, 200 + s), q(1, 20))?)))
        .collect()
}

fn paper_numbers() -> Result<BTreeMap<String, f64>> {
    let mut m = BTreeMap::new();
    let limits = Limits::default();
    let f = rational::to_f64;
    for n in 2..=5 {
        let inst = gen_integrality_gap(n, q(1, 10))?;
        let naive = solve_lp(&build_naive_lp(&inst), crate::lp::DEFAULT_TOLERANCE)?.ensure_optimal()?;
        m.insert(format!("integrality-gap.n{n}.naive-lp"), naive.best_objective());
        m.insert(format!("integrality-gap.n{n}.exact-opt"), f(&exact_opt(&inst, &limits)?.0));
    }
    let gap3 = gen_integrality_gap(3, q(1, 10))?;
    m.insert("integrality-gap.n3.bundle-lp".into(), solve_bundle_lp(build_bundle_lp(&gap3)?)?.best_objective());
    let gap: GapInstance = export_gap(&gap3, int(1))?;
    m.insert("integrality-gap.n3.gap-opt".into(), f(&crate::exact::exact_gap_opt(&gap)?.0));
    for (label, eps) in [("0.5", q(1, 2)), ("0.2", q(1, 5))] {
        let inst = gen_tightness_example(eps)?;
        m.insert(format!("tightness.{label}.exact-opt"), f(&exact_opt(&inst, &limits)?.0));
        m.insert(format!("tightness.{label}.bundling-opt"), f(&exact_bundling_opt(&inst, &limits)?.0));
    }
    let supply = gen_supply_example(3, q(1, 100))?;
    m.insert("supply.k3.exact-opt".into(), f(&exact_opt(&supply, &limits)?.0));
    let dup = crate::bundling::duplicate_supply(&supply, 3)?;
    m.insert("supply.k3.dup3.exact-opt".into(), f(&exact_opt(&dup, &limits)?.0));
    let (adv, order) = gen_adversarial_t(5, q(5, 100))?;
    m.insert("adversarial.T5.greedy-p".into(), f(&allocation_value(&adv, &greedy_p_only(&adv, Some(&order)))?));
    m.insert("adversarial.T5.exact-opt".into(), f(&exact_opt(&adv, &limits)?.0));
    let yes = SetSystem { n_elements: 4, sets: vec![vec![0, 1], vec![2, 3]] };
    let no = SetSystem { n_elements: 4, sets: vec![vec![0, 1], vec![1, 2]] };
    m.insert("max-coverage.yes.exact-opt".into(), f(&exact_opt(&gen_max_coverage(&yes, 2, q(1, 2))?, &limits)?.0));
    m.insert("max-coverage.no.exact-opt".into(), f(&exact_opt(&gen_max_coverage(&no, 2, q(1, 2))?, &limits)?.0));
    m.insert("clique.K3.exact-opt".into(), f(&exact_opt(&gen_genava_clique(&Graph::complete(3), 1.0)?, &limits)?.0));
    m.insert("clique.P3.exact-opt".into(), f(&exact_opt(&gen_genava_clique(&Graph::path(3), 1.0)?, &limits)?.0));
    m.insert("kappa.gamma1.T1000".into(), compute_kappa(1.0, 1000)?);
    let lb: IidModel = gen_iid_lower_bound(20)?;
    m.insert("iid-lower-bound.T20.opton".into(), solve_bundle_lp(build_opton_lp(&lb))?.best_objective());
    Ok(m)
}

/// Runs a named suite. `threads` limits the rayon pool.
pub fn run_suite(name: &str, trials: usize, seed: u64, threads: Option<usize>) -> Result<SuiteReport> {
    let cfg = |params: RoundingParams, factor: Option<f64>| TrialConfig {
        trials,
        seed,
        alpha: params.alpha,
        beta: params.beta,
        factor,
        threads,
    };
    let offline = cfg(RoundingParams::offline(seed), Some(32.0));
    let online = cfg(RoundingParams::online(seed), Some(57.0));
    let budgeted = cfg(RoundingParams { alpha: 1.0 / 3.0, beta: 0.5, seed }, None);
    let mut runs = Vec::new();
    let mut numbers = BTreeMap::new();
    match name {
        "paper-examples" => {
            numbers = paper_numbers()?;
            for (n, inst) in paper_instances()? {
                runs.push(run_trials(&Job::offline(n, inst)?, &offline)?);
            }
            runs.push(run_trials(&Job::online("iid-lower-bound-20", gen_iid_lower_bound(20)?)?, &online)?);
            let (n, inst) = small_bids_instances()?.remove(0);
            runs.push(run_trials(&Job::budgeted(n, inst)?, &budgeted)?);
        }
        "offline-random" => {
            for (n, inst) in offline_random_instances()? {
                runs.push(run_trials(&Job::offline(n, inst)?, &offline)?);
            }
        }
        "online" => {
            for (n, model) in online_models()? {
                runs.push(run_trials(&Job::online(n, model)?, &online)?);
            }
        }
        "small-bids" => {
            for (n, inst) in small_bids_instances()? {
                runs.push(run_trials(&Job::budgeted(n, inst)?, &budgeted)?);
            }
        }
        other => return Err(AvaError::Validation(format!("unknown suite {other:?}; known: {}", SUITES.join(", ")))),
    }
    Ok(SuiteReport { suite: name.to_string(), seed, trials, numbers, runs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_trial_equals_single_run() {
        let inst = gen_integrality_gap(3, q(1, 10)).unwrap();
        let job = Job::offline("gap", inst.clone()).unwrap();
        let params = RoundingParams::offline(11);
        let report = run_trials(&job, &TrialConfig::new(1, 11, params)).unwrap();
        let JobKind::Offline { x, .. } = &job.kind else { unreachable!() };
        let direct = round_offline(&inst, x, &params.with_seed(trial_seed(11, 0))).unwrap();
        assert_eq!(report.mean, rational::to_f64(&direct.value(&inst)));
        assert_eq!(report.std, 0.0);
    }

    #[test]
    fn reports_are_reproducible() {
        let job = Job::online("lb", gen_iid_lower_bound(6).unwrap()).unwrap();
        let mut cfg = TrialConfig::new(200, 3, RoundingParams::online(3));
        let a = serde_json::to_string(&run_trials(&job, &cfg).unwrap()).unwrap();
        cfg.threads = Some(2);
        let b = serde_json::to_string(&run_trials(&job, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_has_one_row_per_run() {
        let job = Job::offline("gap", gen_integrality_gap(2, q(1, 10)).unwrap()).unwrap();
        let run = run_trials(&job, &TrialConfig::new(10, 1, RoundingParams::offline(1))).unwrap();
        let report = SuiteReport { suite: "s".into(), seed: 1, trials: 10, numbers: BTreeMap::new(), runs: vec![run] };
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }

    #[test]
    fn unknown_suite() {
        assert!(run_suite("nope", 1, 0, None).is_err());
    }
}
