mod common;

use common::*;
use mixtoll::equilibrium::{enumerate_equilibria, verify_equilibrium};
use mixtoll::error::Error;
use mixtoll::social_optimum::optimal_routing;
use mixtoll::tolling::{
    best_undifferentiated_toll_two_road, required_prohibitive_toll, synthesize_differentiated_tolls,
    two_road_undiff_cost_closed_form, TollSynthesisConfig,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn synthesized_tolls_enforce_the_optimum((net, d) in arb_instance(5)) {
        check_toll_optimality(&net, &d, 1e-6).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn optimum_is_an_equilibrium_under_its_tolls((net, d) in arb_instance(5), extra in 0.0f64..2.0) {
        let opt = optimal_routing(&net, &d).unwrap();
        let mut config = TollSynthesisConfig::default();
        let synth0 = synthesize_differentiated_tolls(&net, &opt, &config).unwrap();
        config.mu = Some(synth0.mu + extra);
        let synth = synthesize_differentiated_tolls(&net, &opt, &config).unwrap();
        let v = verify_equilibrium(&net, &d, &synth.scheme, &opt.flow, 1e-9).unwrap();
        prop_assert!(v.holds, "{:?}", v.violations);
        prop_assert!(synth.scheme.tolls().iter().all(|t| t.human >= -1e-12 && t.autonomous >= -1e-12));
    }

    #[test]
    fn closed_roads_stay_empty((net, d) in arb_instance(5)) {
        let opt = optimal_routing(&net, &d).unwrap();
        let synth = synthesize_differentiated_tolls(&net, &opt, &TollSynthesisConfig::default()).unwrap();
        let set = enumerate_equilibria(&net, &d, &synth.scheme).unwrap();
        for e in &set.equilibria {
            for (i, f) in e.flow.flows().iter().enumerate() {
                if synth.human_prohibited[i] { prop_assert!(f.human <= 1e-9); }
                if synth.autonomous_prohibited[i] { prop_assert!(f.autonomous <= 1e-9); }
            }
        }
    }

    #[test]
    fn small_prohibitive_toll_is_refused((net, d) in arb_instance(4)) {
        let opt = optimal_routing(&net, &d).unwrap();
        let mu = synthesize_differentiated_tolls(&net, &opt, &TollSynthesisConfig::default()).unwrap().mu;
        let required = required_prohibitive_toll(&net, mu);
        let config = TollSynthesisConfig { mu: Some(mu), prohibitive: Some(required - 0.1) };
        let refused = matches!(
            synthesize_differentiated_tolls(&net, &opt, &config),
            Err(Error::ProhibitiveTollTooSmall { .. })
        );
        prop_assert!(refused);
    }

    #[test]
    fn undifferentiated_gap_grows_with_asymmetry(k in 1.0f64..20.0, dk in 0.01f64..5.0) {
        let gap = |k: f64| two_road_undiff_cost_closed_form(k) - 2.0;
        prop_assert!(gap(k + dk) > gap(k));
        let best = best_undifferentiated_toll_two_road(k).unwrap();
        prop_assert!((best.cost - two_road_undiff_cost_closed_form(k)).abs() <= 1e-9 * k);
        prop_assert!((best.toll - (k - 1.0) / 2.0).abs() <= 1e-12 * k);
    }
}

#[test]
fn asymmetry_below_one_is_rejected() {
    assert!(best_undifferentiated_toll_two_road(0.5).is_err());
}
