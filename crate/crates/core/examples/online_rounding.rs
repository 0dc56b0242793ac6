//! Online rounding on an i.i.d. arrival model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ava::generators::gen_iid_lower_bound;
use ava::lp_models::{build_optoff_lp, build_opton_lp, compute_kappa, solve_bundle_lp};
use ava::rational::display;
use ava::rounding::{check_prefix_feasibility, online_factor, round_online, RoundingParams};

fn main() -> ava::Result<()> {
    let model = gen_iid_lower_bound(20)?;
    let on = solve_bundle_lp(build_opton_lp(&model))?;
    let off = solve_bundle_lp(build_optoff_lp(&model, 1.0)?)?;
    println!(
        "V[ON] {:.4}  V[OFF] {:.4}  kappa {:.3}  factor {:.1}",
        on.best_objective(),
        off.best_objective(),
        compute_kappa(1.0, model.horizon())?,
        online_factor(0.64, 0.1)
    );

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let stream = model.sample_stream(&mut rng);
    let out = round_online(&model, &on, &RoundingParams::online(5), &stream)?;
    check_prefix_feasibility(&out)?;
    for d in &out.trace {
        println!("{d}");
    }
    println!("value {}", display(&out.value));
    Ok(())
}
