//! The named instance families, written to a directory as JSON.
//!
//! `cargo run --example generators -- out/`

use std::path::PathBuf;

use ava::exact::{exact_opt, Limits};
use ava::generators::{
    gen_adversarial_t, gen_iid_lower_bound, gen_max_coverage, gen_random_iid, gen_small_bids, RandomIidParams,
    RandomParams, SetSystem,
};
use ava::model::allocation_value;
use ava::rational::{display, q};
use ava::rounding::greedy_p_only;

fn main() -> ava::Result<()> {
    let dir = PathBuf::from(
        std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("ava-gen").display().to_string()),
    );
    std::fs::create_dir_all(&dir)?;

    let yes = SetSystem { n_elements: 4, sets: vec![vec![0, 1], vec![2, 3]] };
    let cover = gen_max_coverage(&yes, 2, q(1, 2))?;
    println!("max-coverage OPT {}", display(&exact_opt(&cover, &Limits::default())?.0));
    cover.save(dir.join("max-coverage.json"))?;

    let (adv, order) = gen_adversarial_t(5, q(5, 100))?;
    let greedy = greedy_p_only(&adv, Some(&order));
    println!(
        "adversarial T=5: greedy {} OPT {}",
        display(&allocation_value(&adv, &greedy)?),
        display(&exact_opt(&adv, &Limits::default())?.0)
    );
    adv.save(dir.join("adversarial.json"))?;

    gen_small_bids(&RandomParams::new(24, 2, 1), q(1, 20))?.save(dir.join("small-bids.json"))?;
    gen_iid_lower_bound(20)?.save(dir.join("iid-lower-bound.json"))?;
    gen_random_iid(&RandomIidParams { n_types: 5, n_buyers: 2, horizon: 24, seed: 1 })?
        .save(dir.join("random-iid.json"))?;
    println!("wrote {}", dir.display());
    Ok(())
}
