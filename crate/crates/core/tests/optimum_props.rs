mod common;

use common::*;
use mixtoll::equilibrium::best_equilibrium;
use mixtoll::social_optimum::{marginal_costs, optimal_routing, MULTIPLIER_TOL};
use mixtoll::{social_cost, FlowProfile, Network, Road, TollScheme};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn optimum_never_exceeds_best_equilibrium((net, d) in arb_instance(4)) {
        let opt = optimal_routing(&net, &d).unwrap();
        let best = best_equilibrium(&net, &d, &TollScheme::zero(net.len())).unwrap();
        prop_assert!(opt.cost <= best.cost + 1e-9 * best.cost.max(1.0));
    }

    #[test]
    fn optimum_beats_random_feasible_flows((net, d) in arb_instance(5), seed in any::<u64>()) {
        let opt = optimal_routing(&net, &d).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let split = |rng: &mut rand_chacha::ChaCha8Rng, total: f64| {
            let w: Vec<f64> = (0..net.len()).map(|_| rng.gen::<f64>()).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| total * x / s).collect::<Vec<_>>()
        };
        for _ in 0..20 {
            let h = split(&mut rng, d.human);
            let a = split(&mut rng, d.autonomous);
            let pairs: Vec<(f64, f64)> = h.into_iter().zip(a).collect();
            let c = social_cost(&net, &FlowProfile::from_pairs(&pairs).unwrap()).unwrap();
            prop_assert!(opt.cost <= c + 1e-9 * c.max(1.0));
        }
    }

    #[test]
    fn optimum_satisfies_stationarity((net, d) in arb_instance(5)) {
        let opt = optimal_routing(&net, &d).unwrap();
        let lh = opt.multipliers.human.unwrap();
        let la = opt.multipliers.autonomous.unwrap();
        let scale = lh.abs().max(la.abs()).max(1.0);
        for (r, f) in net.roads().iter().zip(opt.flow.flows()) {
            let (gh, ga) = marginal_costs(r, f.human, f.autonomous);
            prop_assert!(gh >= lh - MULTIPLIER_TOL * scale);
            prop_assert!(ga >= la - MULTIPLIER_TOL * scale);
            if f.human > 1e-9 { prop_assert!((gh - lh).abs() <= 1e-7 * scale); }
            if f.autonomous > 1e-9 { prop_assert!((ga - la).abs() <= 1e-7 * scale); }
        }
    }

    #[test]
    fn one_mixed_road_on_random_networks((net, d) in arb_instance(6)) {
        check_one_mixed_road(&net, &d).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn hessian_identity_holds(roads in proptest::collection::vec(arb_road(), 2..5)) {
        check_hessian_identity(&Network::new(roads).unwrap()).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn marginal_costs_match_differences((net, d) in arb_instance(5), seed in any::<u64>()) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        check_finite_differences(&net, &d, &mut rng).map_err(TestCaseError::fail)?;
    }
}

#[test]
fn grid_oracle_agrees_on_small_suite_instances() {
    for (net, d) in instances(false).into_iter().filter(|(n, _)| n.len() <= 3).take(40) {
        check_oracle_agreement(&net, &d).unwrap();
    }
}

#[test]
fn symmetric_roads_drop_the_guarantee() {
    let net = Network::new(vec![Road::new(1.0, 1.0, 0.0).unwrap(), Road::new(2.0, 1.0, 0.3).unwrap(), Road::new(1.0, 3.0, 0.0).unwrap()]).unwrap();
    let opt = optimal_routing(&net, &mixtoll::Demand::new(1.0, 2.0).unwrap()).unwrap();
    assert!(!opt.separation_guaranteed);
}
