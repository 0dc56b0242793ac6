//! Naive LP versus Bundle-LP on the integrality-gap family.

use ava::exact::{exact_opt, Limits};
use ava::generators::gen_integrality_gap;
use ava::lp::{solve_lp, to_lp_format, DEFAULT_TOLERANCE};
use ava::lp_models::{build_bundle_lp, build_naive_lp};
use ava::rational::{display, q};

fn main() -> ava::Result<()> {
    println!("{:>3} {:>8} {:>8} {:>8}", "n", "naive", "bundle", "OPT");
    for n in 2..=6 {
        let inst = gen_integrality_gap(n, q(1, 10))?;
        let naive = solve_lp(&build_naive_lp(&inst), DEFAULT_TOLERANCE)?.ensure_optimal()?;
        let bundle = solve_lp(&build_bundle_lp(&inst)?.lp, DEFAULT_TOLERANCE)?.ensure_optimal()?;
        let (opt, _) = exact_opt(&inst, &Limits::default())?;
        println!("{n:>3} {:>8.4} {:>8.4} {:>8}", naive.best_objective(), bundle.best_objective(), display(&opt));
    }

    let inst = gen_integrality_gap(2, q(1, 10))?;
    println!("\nBundle-LP for n = 2:\n{}", to_lp_format(&build_bundle_lp(&inst)?.lp));
    Ok(())
}
