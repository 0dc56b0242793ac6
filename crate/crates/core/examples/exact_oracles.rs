//! Exhaustive optima and their size limits.

use ava::bundling::duplicate_supply;
use ava::exact::{exact_bundling_opt, exact_opt, state_count, Limits};
use ava::generators::gen_supply_example;
use ava::rational::{display, q};
use ava::AvaError;

fn main() -> ava::Result<()> {
    let base = gen_supply_example(3, q(1, 100))?;
    for k in 1..=3 {
        let inst = duplicate_supply(&base, k)?;
        let (opt, alloc) = exact_opt(&inst, &Limits::default())?;
        let (bopt, _) = exact_bundling_opt(&inst, &Limits::default())?;
        println!(
            "copies {k}: {} states, OPT {} ({} items used), bundled {}",
            state_count(&inst),
            display(&opt),
            alloc.len(),
            display(&bopt)
        );
    }

    let big = duplicate_supply(&base, 3)?;
    match exact_opt(&big, &Limits { max_states: 1000 }) {
        Err(e @ AvaError::TooLarge { .. }) => println!("limit 1000: {e}"),
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}
