//! Command-line front end. Exit codes: 0 success, 2 validation or usage
//! error, 3 search space too large, 1 I/O failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bundling::duplicate_supply;
use crate::error::{AvaError, Result};
use crate::exact::{exact_bundling_opt, exact_gap_opt, exact_opt, Limits};
use crate::gap::export_gap;
use crate::genava::{genava_bicriteria_greedy, genava_single_buyer};
use crate::generators::{
    gen_adversarial_t, gen_bicriteria, gen_genava_clique, gen_iid_lower_bound, gen_integrality_gap, gen_max_coverage,
    gen_random, gen_random_genava, gen_random_iid, gen_small_bids, gen_supply_example, gen_tightness_example, Graph,
    RandomIidParams, RandomParams, SetSystem,
};
use crate::harness::{run_suite, run_trials, trial_seed, Job, TrialConfig, SEED_ENV, SUITES};
use crate::iid::IidModel;
use crate::lp::{solve_lp, to_lp_format, DEFAULT_TOLERANCE};
use crate::lp_models::{
    build_bundle_lp, build_bundle_lp_budgeted, build_naive_lp, build_optoff_lp, build_opton_lp, solve_bundle_lp,
};
use crate::model::{allocation_value, Allocation, Instance};
use crate::rational::{self, Rational};
use crate::rounding::{greedy_p_only, round_offline, round_offline_budgeted, round_online, RoundingParams};

const FORMATS: &str = "Instance files: {\"buyers\": [{\"id\", \"rho\", \"budgets\"?}], \
\"items\": [{\"id\", \"values\": {buyer: v}, \"costs\"?, \"resource_costs\"?}], \"notes\"?}. \
Model files add \"probs\": {type: q} and \"horizon\": T, with \"types\" in place of \"items\". \
Numbers are JSON numbers or \"a/b\" strings. See README.md.";

#[derive(Parser, Debug)]
#[command(name = "ava", version, about = "Average-value allocation toolkit", after_help = FORMATS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a named instance family or a random instance.
    Gen(GenArgs),
    /// Run an approximation algorithm on an instance.
    Solve(SolveArgs),
    /// Exhaustive optimum of a small instance.
    Exact(ExactArgs),
    /// Run the online rounding on an i.i.d. model.
    Online(OnlineArgs),
    /// Solve one of the linear programs.
    Lp(LpArgs),
    /// Run a benchmark suite.
    Bench(BenchArgs),
    /// Export an unambiguous instance as a GAP instance.
    ExportGap(ExportGapArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Family {
    IntegralityGap,
    Supply,
    Tightness,
    MaxCoverage,
    GenavaClique,
    Bicriteria,
    IidLowerBound,
    Adversarial,
    Random,
    RandomGenava,
    SmallBids,
    RandomIid,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum GraphKind {
    Complete,
    Path,
    Cycle,
}

#[derive(Args, Debug)]
struct GenArgs {
    family: Family,
    #[arg(short = 'n', long, default_value_t = 3)]
    n: usize,
    #[arg(short = 'k', long, default_value_t = 2)]
    k: usize,
    /// Copies per item after generation (supply family).
    #[arg(long, default_value_t = 1)]
    dup: usize,
    #[arg(long, default_value = "0.1")]
    eps: String,
    #[arg(short = 'T', long = "horizon", default_value_t = 10)]
    horizon: usize,
    #[arg(long, default_value_t = 6)]
    items: usize,
    #[arg(long, default_value_t = 2)]
    buyers: usize,
    #[arg(long, default_value_t = 4)]
    types: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    /// Largest cost as a fraction of the budget (small-bids).
    #[arg(long, default_value = "0.05")]
    frac: String,
    #[arg(long, value_enum, default_value_t = GraphKind::Complete)]
    graph: GraphKind,
    #[arg(long, default_value_t = 3)]
    vertices: usize,
    /// Set system for max-coverage, e.g. "0,1;2,3".
    #[arg(long, default_value = "0,1;2,3")]
    sets: String,
    #[arg(long, default_value_t = 4)]
    elements: usize,
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Algo {
    BundleRound,
    BundleRoundBudgeted,
    GreedyP,
    Bicriteria,
    SingleBuyer,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(short = 'i', long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Slack of the bicriteria rule.
    #[arg(long, default_value = "0.5")]
    eps: String,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    /// Write the allocation as JSON.
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[arg(short = 'i', long)]
    input: PathBuf,
    #[arg(long)]
    bundling: bool,
    /// Solve the exported GAP instance instead.
    #[arg(long)]
    gap: bool,
    #[arg(long, default_value_t = 10_000_000)]
    limit: u128,
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OnlineArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 0.64)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    /// Write the decision trace of the first trial, one JSON record per line.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Which {
    Naive,
    Bundle,
    Budgeted,
    Opton,
    Optoff,
}

#[derive(Args, Debug)]
struct LpArgs {
    /// Instance file, or model file for opton/optoff.
    #[arg(short = 'i', long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    which: Which,
    /// Arrival floor for optoff.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Also write the LP in LP text format.
    #[arg(long)]
    export: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value = "paper-examples")]
    suite: String,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
    /// CSV mirror of the per-run table.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExportGapArgs {
    #[arg(short = 'i', long)]
    input: PathBuf,
    #[arg(long, default_value = "1")]
    eps_gap: String,
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
}

/// Allocation file written by `solve` and `exact`.
#[derive(Serialize)]
struct AllocationFile {
    value: String,
    assignment: BTreeMap<String, String>,
}

fn allocation_file(inst: &Instance, alloc: &Allocation, value: &Rational) -> AllocationFile {
    AllocationFile {
        value: rational::display(value),
        assignment: alloc.iter().map(|(i, j)| (inst.item_name(i).to_string(), inst.buyer(j).name.clone())).collect(),
    }
}

fn write_or_print(out: &mut dyn Write, path: &Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, format!("{text}\n"))?,
        None => writeln!(out, "{text}")?,
    }
    Ok(())
}

fn number(s: &str) -> Result<Rational> {
    rational::parse(s)
}

/// Prints a value as a decimal with at least one fractional digit.
fn show(x: f64) -> String {
    format!("{x:?}")
}

fn show_exact(r: &Rational) -> String {
    if rational::is_terminating(r) {
        let s = rational::display(r);
        if s.contains('.') {
            s
        } else {
            format!("{s}.0")
        }
    } else {
        show(rational::to_f64(r))
    }
}

fn gen(args: GenArgs, out: &mut dyn Write) -> Result<()> {
    let eps = || number(&args.eps);
    let graph = || match args.graph {
        GraphKind::Complete => Graph::complete(args.vertices),
        GraphKind::Path => Graph::path(args.vertices),
        GraphKind::Cycle => Graph::cycle(args.vertices),
    };
    let random = || RandomParams::new(args.items, args.buyers, args.seed);
    let text = match args.family {
        Family::IntegralityGap => gen_integrality_gap(args.n, eps()?)?.to_json_string(),
        Family::Supply => duplicate_supply(&gen_supply_example(args.k, eps()?)?, args.dup)?.to_json_string(),
        Family::Tightness => gen_tightness_example(eps()?)?.to_json_string(),
        Family::MaxCoverage => {
            let sets = args
                .sets
                .split(';')
                .map(|s| {
                    s.split(',')
                        .map(|e| e.trim().parse::<usize>().map_err(|e| AvaError::Validation(format!("bad set: {e}"))))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            gen_max_coverage(&SetSystem { n_elements: args.elements, sets }, args.k, eps()?)?.to_json_string()
        }
        Family::GenavaClique => {
            let e = rational::to_f64(&eps()?);
            gen_genava_clique(&graph(), e)?.to_json_string()
        }
        Family::Bicriteria => gen_bicriteria(&graph())?.0.to_json_string(),
        Family::IidLowerBound => gen_iid_lower_bound(args.horizon)?.to_json_string(),
        Family::Adversarial => gen_adversarial_t(args.horizon, eps()?)?.0.to_json_string(),
        Family::Random => gen_random(&random())?.to_json_string(),
        Family::RandomGenava => gen_random_genava(args.items, args.buyers, args.seed)?.to_json_string(),
        Family::SmallBids => gen_small_bids(&random(), number(&args.frac)?)?.to_json_string(),
        Family::RandomIid => gen_random_iid(&RandomIidParams {
            n_types: args.types,
            n_buyers: args.buyers,
            horizon: args.horizon,
            seed: args.seed,
        })?
        .to_json_string(),
    };
    write_or_print(out, &args.output, &text)
}

fn solve(args: SolveArgs, out: &mut dyn Write) -> Result<()> {
    let inst = Instance::load(&args.input)?;
    let default_alpha = match args.algo {
        Algo::BundleRoundBudgeted => 1.0 / (3.0 * inst.resources().len().max(1) as f64),
        _ => 0.3,
    };
    let params = RoundingParams::new(args.alpha.unwrap_or(default_alpha), args.beta, args.seed)?;
    let alloc = match args.algo {
        Algo::BundleRound => {
            let x = solve_bundle_lp(build_bundle_lp(&inst)?)?;
            writeln!(out, "lp {}", show(x.best_objective()))?;
            round_offline(&inst, &x, &params)?.to_allocation()
        }
        Algo::BundleRoundBudgeted => {
            let x = solve_bundle_lp(build_bundle_lp_budgeted(&inst)?)?;
            writeln!(out, "lp {}", show(x.best_objective()))?;
            round_offline_budgeted(&inst, &x, &params)?.to_allocation()
        }
        Algo::GreedyP => greedy_p_only(&inst, None),
        Algo::Bicriteria => {
            let res = genava_bicriteria_greedy(&inst, number(&args.eps)?)?;
            for b in &res.per_buyer {
                let ratio = b.ratio().map(|r| show(rational::to_f64(&r))).unwrap_or_else(|| "-".into());
                writeln!(out, "buyer {} spend/value {ratio}", inst.buyer(b.buyer).name)?;
            }
            res.allocation
        }
        Algo::SingleBuyer => genava_single_buyer(&inst),
    };
    let value = allocation_value(&inst, &alloc)?;
    writeln!(out, "value {}", show_exact(&value))?;
    if let Some(p) = &args.output {
        let text = serde_json::to_string_pretty(&allocation_file(&inst, &alloc, &value))?;
        std::fs::write(p, text + "\n")?;
    }
    Ok(())
}

fn exact(args: ExactArgs, out: &mut dyn Write) -> Result<()> {
    let inst = Instance::load(&args.input)?;
    let limits = Limits { max_states: args.limit };
    let (value, alloc) = if args.gap {
        let gap = export_gap(&inst, Rational::from_integer(1))?;
        let (v, sol) = exact_gap_opt(&gap)?;
        let bundles = crate::gap::gap_solution_to_bundles(&sol, &gap, &inst)?;
        (v, bundles.to_allocation())
    } else if args.bundling {
        let (v, b) = exact_bundling_opt(&inst, &limits)?;
        (v, b.to_allocation())
    } else {
        exact_opt(&inst, &limits)?
    };
    writeln!(out, "{}", show_exact(&value))?;
    if let Some(p) = &args.output {
        std::fs::write(p, serde_json::to_string_pretty(&allocation_file(&inst, &alloc, &value))? + "\n")?;
    }
    Ok(())
}

fn online(args: OnlineArgs, out: &mut dyn Write) -> Result<()> {
    let model = IidModel::load(&args.model)?;
    let params = RoundingParams::new(args.alpha, args.beta, args.seed)?;
    let job = Job::online(args.model.display().to_string(), model.clone())?;
    if let Some(path) = &args.trace {
        let x = solve_bundle_lp(build_opton_lp(&model))?;
        let first = params.with_seed(trial_seed(args.seed, 0));
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(first.seed);
        rng.set_stream(u64::MAX);
        let stream = model.sample_stream(&mut rng);
        let res = round_online(&model, &x, &first, &stream)?;
        let lines: Vec<String> = res.trace.iter().map(|d| d.to_string()).collect();
        std::fs::write(path, lines.join("\n") + "\n")?;
    }
    let mut cfg = TrialConfig::new(args.trials, args.seed, params);
    cfg.threads = args.threads;
    let r = run_trials(&job, &cfg)?;
    writeln!(out, "opton {}", show(r.lp_value))?;
    writeln!(
        out,
        "mean {} std {} ci [{}, {}] min {}",
        show(r.mean),
        show(r.std),
        show(r.ci_low),
        show(r.ci_high),
        show(r.min)
    )?;
    writeln!(out, "feasible {}/{} gamma {}", r.feasible, r.trials, show(r.gamma))?;
    Ok(())
}

fn lp(args: LpArgs, out: &mut dyn Write) -> Result<()> {
    let program = match args.which {
        Which::Naive => build_naive_lp(&Instance::load(&args.input)?),
        Which::Bundle => build_bundle_lp(&Instance::load(&args.input)?)?.lp,
        Which::Budgeted => build_bundle_lp_budgeted(&Instance::load(&args.input)?)?.lp,
        Which::Opton => build_opton_lp(&IidModel::load(&args.input)?).lp,
        Which::Optoff => build_optoff_lp(&IidModel::load(&args.input)?, args.gamma)?.lp,
    };
    if let Some(p) = &args.export {
        std::fs::write(p, to_lp_format(&program))?;
    }
    let sol = solve_lp(&program, DEFAULT_TOLERANCE)?.ensure_optimal()?;
    writeln!(out, "{}", show(sol.best_objective()))?;
    Ok(())
}

fn bench(args: BenchArgs, out: &mut dyn Write) -> Result<()> {
    if !SUITES.contains(&args.suite.as_str()) {
        return Err(AvaError::Validation(format!("unknown suite {:?}; known: {}", args.suite, SUITES.join(", "))));
    }
    let report = run_suite(&args.suite, args.trials, args.seed, args.threads)?;
    write_or_print(out, &args.output, &report.to_json_string())?;
    if let Some(p) = &args.csv {
        report.write_csv(std::fs::File::create(p)?)?;
    }
    Ok(())
}

fn export(args: ExportGapArgs, out: &mut dyn Write) -> Result<()> {
    let inst = Instance::load(&args.input)?;
    let gap = export_gap(&inst, number(&args.eps_gap)?)?;
    write_or_print(out, &args.output, &gap.to_json_string())
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Gen(a) => gen(a, out),
        Command::Solve(a) => solve(a, out),
        Command::Exact(a) => exact(a, out),
        Command::Online(a) => online(a, out),
        Command::Lp(a) => lp(a, out),
        Command::Bench(a) => bench(a, out),
        Command::ExportGap(a) => export(a, out),
    }
}

/// Parses `args` (including the program name), runs the command writing to
/// `out`, and returns the process exit code. Errors go to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
