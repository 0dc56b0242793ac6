//! Run a benchmark suite with few trials and print its table.
//!
//! `cargo run --release --example bench_suite -- online 2000`

use ava::harness::{run_suite, SUITES};

fn main() -> ava::Result<()> {
    let mut args = std::env::args().skip(1);
    let suite = args.next().unwrap_or_else(|| "paper-examples".into());
    let trials = args.next().and_then(|s| s.parse().ok()).unwrap_or(1000);
    if !SUITES.contains(&suite.as_str()) {
        eprintln!("suites: {SUITES:?}");
        std::process::exit(2);
    }
    let report = run_suite(&suite, trials, 0, None)?;
    for (k, v) in &report.numbers {
        println!("{k:<32} {v:.4}");
    }
    println!();
    for r in &report.runs {
        println!(
            "{:<28} lp {:>8.4} mean {:>8.4} ci [{:.4}, {:.4}] feasible {}/{} clears {:?}",
            r.name, r.lp_value, r.mean, r.ci_low, r.ci_high, r.feasible, r.trials, r.clears
        );
    }
    Ok(())
}
