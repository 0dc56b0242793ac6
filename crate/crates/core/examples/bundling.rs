//! Bundled allocations: how much a bundling can lose, and extracting one
//! from a feasible allocation.

use ava::bundling::extract_bundling;
use ava::exact::{exact_bundling_opt, exact_opt, Limits};
use ava::generators::{gen_random, gen_tightness_example, RandomParams};
use ava::model::EdgeClass;
use ava::rational::{display, q};
use ava::ItemId;

fn main() -> ava::Result<()> {
    let limits = Limits::default();
    for eps in [q(1, 2), q(1, 5), q(1, 10)] {
        let inst = gen_tightness_example(eps)?;
        let (opt, _) = exact_opt(&inst, &limits)?;
        let (bopt, bundling) = exact_bundling_opt(&inst, &limits)?;
        println!(
            "eps {}: OPT {} bundled {} ratio {}",
            display(&eps),
            display(&opt),
            display(&bopt),
            display(&(opt / bopt))
        );
        for b in &bundling.bundles {
            let members: Vec<&str> = b.items().map(|i| inst.item_name(i)).collect();
            println!("  {} <- {:?}", inst.buyer(b.buyer).name, members);
        }
    }

    let inst = gen_random(&RandomParams::new(7, 2, 3))?;
    let (opt, alloc) = exact_opt(&inst, &limits)?;
    // P-edges first keeps every prefix feasible
    let mut order: Vec<ItemId> = inst.items().collect();
    order.sort_by_key(|&i| alloc.get(i).map(|j| inst.class(i, j) == Some(EdgeClass::N)));
    let bundling = extract_bundling(&inst, &alloc, &order)?;
    println!("\nrandom instance: OPT {} extracted {}", display(&opt), display(&bundling.value(&inst)));
    Ok(())
}
