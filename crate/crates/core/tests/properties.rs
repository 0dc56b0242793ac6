use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ava::bundling::extract_bundling;
use ava::exact::{exact_bundling_opt, exact_gap_opt, exact_opt, Limits};
use ava::gap::{export_gap, GapInstance};
use ava::generators::{gen_random, gen_random_iid, RandomIidParams, RandomParams};
use ava::iid::IidModel;
use ava::lp::{solve_lp, DEFAULT_TOLERANCE};
use ava::lp_models::{build_bundle_lp, build_naive_lp, build_opton_lp, solve_bundle_lp};
use ava::model::{allocation_value, is_feasible, EdgeClass};
use ava::rational::{int, to_f64};
use ava::rounding::{check_prefix_feasibility, round_offline, round_online, RoundingParams};
use ava::{Instance, InstanceBuilder, ItemId, Rational};

fn small_instance() -> impl Strategy<Value = Instance> {
    (2usize..=6, 1usize..=3, any::<u64>(), 0.2f64..0.7, any::<bool>()).prop_map(|(n, m, seed, p, unamb)| {
        let mut params = RandomParams::new(n, m, seed);
        params.p_density = p;
        params.unambiguous = unamb;
        gen_random(&params).unwrap()
    })
}

fn unambiguous_instance() -> impl Strategy<Value = Instance> {
    (2usize..=6, 1usize..=3, any::<u64>(), 0.2f64..0.7).prop_map(|(n, m, seed, p)| {
        let mut params = RandomParams::new(n, m, seed);
        params.p_density = p;
        gen_random(&params).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bundling_within_factor_two(inst in small_instance()) {
        let limits = Limits::default();
        let (opt, alloc) = exact_opt(&inst, &limits).unwrap();
        let (bopt, bundling) = exact_bundling_opt(&inst, &limits).unwrap();
        prop_assert!(is_feasible(&inst, &alloc).unwrap().is_feasible());
        prop_assert_eq!(allocation_value(&inst, &alloc).unwrap(), opt);
        bundling.validate(&inst).unwrap();
        prop_assert_eq!(bundling.value(&inst), bopt);
        prop_assert!(bopt <= opt);
        prop_assert!(opt <= int(2) * bopt);
    }

    #[test]
    fn extracted_bundling_keeps_half(inst in small_instance()) {
        let (opt, alloc) = exact_opt(&inst, &Limits::default()).unwrap();
        let mut order: Vec<ItemId> = inst.items().collect();
        order.sort_by_key(|&i| alloc.get(i).map(|j| inst.class(i, j) == Some(EdgeClass::N)));
        let b = extract_bundling(&inst, &alloc, &order).unwrap();
        b.validate(&inst).unwrap();
        prop_assert!(int(2) * b.value(&inst) >= opt);
    }

    #[test]
    fn lp_values_bound_the_optima(inst in unambiguous_instance()) {
        let limits = Limits::default();
        let naive = solve_lp(&build_naive_lp(&inst), DEFAULT_TOLERANCE).unwrap().ensure_optimal().unwrap();
        let bundle = solve_bundle_lp(build_bundle_lp(&inst).unwrap()).unwrap();
        let opt = to_f64(&exact_opt(&inst, &limits).unwrap().0);
        let bopt = to_f64(&exact_bundling_opt(&inst, &limits).unwrap().0);
        prop_assert!(naive.best_objective() >= opt - 1e-7);
        prop_assert!(bundle.best_objective() >= bopt - 1e-7);
        prop_assert!(bundle.best_objective() <= naive.best_objective() + 1e-7);
    }

    #[test]
    fn offline_rounding_is_feasible_and_deterministic(inst in unambiguous_instance(), seed in any::<u64>()) {
        let x = solve_bundle_lp(build_bundle_lp(&inst).unwrap()).unwrap();
        let params = RoundingParams::offline(seed);
        let a = round_offline(&inst, &x, &params).unwrap();
        a.validate(&inst).unwrap();
        prop_assert!(is_feasible(&inst, &a.to_allocation()).unwrap().is_feasible());
        let b = round_offline(&inst, &x, &params).unwrap();
        prop_assert_eq!(a.normalized(), b.normalized());
    }

    #[test]
    fn gap_optimum_matches_bundling(inst in unambiguous_instance()) {
        let gap = export_gap(&inst, int(1)).unwrap();
        prop_assume!(gap.elements.len() <= 10 && gap.bins.len() <= 12);
        let (gv, sol) = exact_gap_opt(&gap).unwrap();
        sol.validate(&gap).unwrap();
        prop_assert_eq!(gv, exact_bundling_opt(&inst, &Limits::default()).unwrap().0);
        let back = GapInstance::from_json_str(&gap.to_json_string()).unwrap();
        prop_assert_eq!(back, gap);
    }

    #[test]
    fn instance_json_round_trip(inst in small_instance()) {
        let back = Instance::from_json_str(&inst.to_json_string()).unwrap();
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn online_rounding_is_prefix_feasible(types in 3usize..=5, buyers in 1usize..=3, half in 3usize..=10, seed in any::<u64>()) {
        let model = gen_random_iid(&RandomIidParams { n_types: types, n_buyers: buyers, horizon: 2 * half, seed }).unwrap();
        let back = IidModel::from_json_str(&model.to_json_string()).unwrap();
        prop_assert_eq!(&back, &model);
        let x = solve_bundle_lp(build_opton_lp(&model)).unwrap();
        let stream = model.sample_stream(&mut ChaCha8Rng::seed_from_u64(seed));
        let params = RoundingParams::online(seed);
        let out = round_online(&model, &x, &params, &stream).unwrap();
        check_prefix_feasibility(&out).unwrap();
        prop_assert_eq!(out.trace.len(), stream.len());
        prop_assert_eq!(out.bundling.value(&out.instance), out.value);
        let again = round_online(&model, &x, &params, &stream).unwrap();
        prop_assert_eq!(again.value, out.value);
    }

    #[test]
    fn scaling_values_scales_the_optimum(inst in unambiguous_instance(), k in 2i128..5) {
        let mut b = InstanceBuilder::new();
        for j in inst.buyer_ids() {
            b.add_buyer(inst.buyer(j).name.clone(), inst.rho(j) * int(k));
        }
        for i in inst.items() {
            let id = b.add_item(inst.item_name(i));
            for e in inst.edges(i) {
                b.set_value(id, e.buyer, e.value * int(k));
            }
        }
        let scaled = b.build().unwrap();
        let limits = Limits::default();
        let opt: Rational = exact_opt(&inst, &limits).unwrap().0;
        prop_assert_eq!(exact_opt(&scaled, &limits).unwrap().0, opt * int(k));
        let lp = solve_bundle_lp(build_bundle_lp(&inst).unwrap()).unwrap().best_objective();
        let lp_scaled = solve_bundle_lp(build_bundle_lp(&scaled).unwrap()).unwrap().best_objective();
        prop_assert!((lp_scaled - k as f64 * lp).abs() <= 1e-7 * (1.0 + lp_scaled));
    }
}

/// Frozen optima of three generated instances (also listed in the README).
#[test]
fn frozen_random_optima() {
    let cases = [(7u64, "8.13"), (11, "6.6"), (42, "4.49")];
    for (seed, want) in cases {
        let inst = gen_random(&RandomParams::new(6, 2, seed)).unwrap();
        let (opt, _) = exact_opt(&inst, &Limits::default()).unwrap();
        assert_eq!(ava::rational::display(&opt), want, "seed {seed}");
    }
}
