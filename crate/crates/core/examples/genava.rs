//! General average-value constraints: bicriteria greedy, one buyer, and
//! the clique construction.

use ava::exact::{exact_opt, Limits};
use ava::genava::{bicriteria_bound, genava_bicriteria_greedy, genava_single_buyer};
use ava::generators::{gen_bicriteria, gen_genava_clique, gen_random_genava, Graph};
use ava::model::allocation_value;
use ava::rational::{display, q};

fn main() -> ava::Result<()> {
    let inst = gen_random_genava(8, 3, 4)?;
    let eps = q(1, 4);
    let out = genava_bicriteria_greedy(&inst, eps)?;
    println!(
        "bicriteria eps 1/4: value {}, spend/value bound {}",
        display(&out.value()),
        display(&bicriteria_bound(eps))
    );
    for b in &out.per_buyer {
        if let Some(r) = b.ratio() {
            println!("  {} spend/value {}", inst.buyer(b.buyer).name, display(&r));
        }
    }
    println!("OPT {}", display(&exact_opt(&inst, &Limits::default())?.0));

    let one = gen_random_genava(8, 1, 4)?;
    let single = genava_single_buyer(&one);
    println!(
        "\nsingle buyer: {} vs OPT {}",
        display(&allocation_value(&one, &single)?),
        display(&exact_opt(&one, &Limits::default())?.0)
    );

    for g in [Graph::complete(3), Graph::path(3), Graph::cycle(4)] {
        let inst = gen_genava_clique(&g, 1.0)?;
        println!(
            "graph n={} |E|={} alpha={}: OPT {}",
            g.n,
            g.edges.len(),
            g.independence_number(),
            display(&exact_opt(&inst, &Limits::default())?.0)
        );
    }
    let (inst, m) = gen_bicriteria(&Graph::complete(3))?;
    println!("bicriteria family on K3: M = {}, {} items", display(&m), inst.n_items());
    Ok(())
}
