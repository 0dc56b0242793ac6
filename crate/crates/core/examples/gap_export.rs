//! Export an unambiguous instance as a GAP instance and solve it both ways.

use ava::exact::{exact_bundling_opt, exact_gap_opt, Limits};
use ava::gap::{export_gap, gap_solution_to_bundles, GapInstance};
use ava::generators::gen_integrality_gap;
use ava::rational::{display, int, q};

fn main() -> ava::Result<()> {
    let inst = gen_integrality_gap(3, q(1, 10))?;
    let gap = export_gap(&inst, int(1))?;
    let json = gap.to_json_string();
    println!("{json}");

    let gap = GapInstance::from_json_str(&json)?;
    let (gv, sol) = exact_gap_opt(&gap)?;
    let (bv, _) = exact_bundling_opt(&inst, &Limits::default())?;
    println!("GAP {}  bundling {}", display(&gv), display(&bv));
    for b in gap_solution_to_bundles(&sol, &gap, &inst)?.bundles {
        let items: Vec<&str> = b.items().map(|i| inst.item_name(i)).collect();
        println!("  {} {:?}", inst.buyer(b.buyer).name, items);
    }
    Ok(())
}
