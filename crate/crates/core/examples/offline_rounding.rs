//! Offline rounding of the Bundle-LP, with and without budgets.

use ava::generators::{gen_random, gen_small_bids, RandomParams};
use ava::lp_models::{build_bundle_lp, build_bundle_lp_budgeted, solve_bundle_lp};
use ava::model::is_feasible;
use ava::rational::{display, q, to_f64};
use ava::rounding::{offline_factor, round_offline, round_offline_budgeted, RoundingParams};

fn main() -> ava::Result<()> {
    let inst = gen_random(&RandomParams::new(8, 3, 11))?;
    let x = solve_bundle_lp(build_bundle_lp(&inst)?)?;
    println!("LP {:.4}, guarantee LP/{:.1}", x.best_objective(), offline_factor(0.3, 0.5));

    let trials = 2000;
    let mut total = 0.0;
    for seed in 0..trials {
        let b = round_offline(&inst, &x, &RoundingParams::offline(seed))?;
        assert!(is_feasible(&inst, &b.to_allocation())?.is_feasible());
        total += to_f64(&b.value(&inst));
    }
    println!("mean over {trials} seeds: {:.4}", total / trials as f64);

    let one = round_offline(&inst, &x, &RoundingParams::offline(1))?;
    for b in &one.bundles {
        let items: Vec<&str> = b.items().map(|i| inst.item_name(i)).collect();
        println!("  {} {:?} value {}", inst.buyer(b.buyer).name, items, display(&b.value(&inst)));
    }

    let bids = gen_small_bids(&RandomParams::new(24, 2, 201), q(1, 20))?;
    let y = solve_bundle_lp(build_bundle_lp_budgeted(&bids)?)?;
    let params = RoundingParams::new(1.0 / 3.0, 0.5, 7)?;
    let b = round_offline_budgeted(&bids, &y, &params)?;
    println!("\nbudgeted: LP {:.4}, one rounding {}", y.best_objective(), display(&b.value(&bids)));
    Ok(())
}
