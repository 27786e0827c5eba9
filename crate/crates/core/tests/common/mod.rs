#![allow(dead_code)]

use mixtoll::bounds::{empirical_autonomy_ratio, network_asymmetry, price_of_autonomy_bound};
use mixtoll::equilibrium::enumerate_equilibria;
use mixtoll::random::RandomSuite;
use mixtoll::social_optimum::{
    grid_oracle, marginal_costs, optimal_routing, pair_hessian_determinant, road_pair_hessian,
    OptimumResult,
};
use mixtoll::tolling::{synthesize_differentiated_tolls, TollSynthesisConfig};
use mixtoll::{social_cost, Demand, FlowProfile, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DATA_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data");

pub fn data_path(name: &str) -> String {
    format!("{DATA_DIR}/{name}")
}

pub fn suite() -> RandomSuite {
    serde_json::from_str(include_str!("../../../../data/random_suite.json"))
        .expect("random suite parses")
}

/// The seeded instance list. `asymmetric` draws every `k_i ≥ 1`.
pub fn instances(asymmetric: bool) -> Vec<(Network, Demand)> {
    let s = suite();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ u64::from(asymmetric));
    (0..s.instances)
        .map(|_| s.instance(&mut rng, asymmetric))
        .collect()
}

pub fn rng_for(index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(suite().seed.wrapping_add(1000 + index as u64))
}

pub fn three_road() -> (Network, Demand) {
    use mixtoll::Road;
    let net = Network::new(vec![
        Road::new(1.0, 4.0, 0.5).unwrap(),
        Road::new(1.0, 2.0, 1.0).unwrap(),
        Road::new(3.0, 1.0 / 3.0, 0.5).unwrap(),
    ])
    .unwrap();
    (net, Demand::new(2.625, 2.5).unwrap())
}

pub fn two_road(k: f64) -> (Network, Demand) {
    use mixtoll::Road;
    let net = Network::new(vec![
        Road::new(1.0, k, 0.0).unwrap(),
        Road::new(k, 1.0 / k, 0.0).unwrap(),
    ])
    .unwrap();
    (net, Demand::new(1.0, 1.0).unwrap())
}

/// At most one road carries both classes at the optimum.
pub fn check_one_mixed_road(net: &Network, d: &Demand) -> Result<OptimumResult, String> {
    let opt = optimal_routing(net, d).map_err(|e| e.to_string())?;
    if !opt.separation_guaranteed {
        return Err("separation not guaranteed on a suite instance".into());
    }
    if opt.mixed_roads.len() > 1 {
        return Err(format!("{} mixed roads: {:?}", opt.mixed_roads.len(), opt.flow));
    }
    Ok(opt)
}

/// Every equilibrium under the synthesized tolls costs the optimum.
pub fn check_toll_optimality(net: &Network, d: &Demand, tol: f64) -> Result<(), String> {
    let opt = optimal_routing(net, d).map_err(|e| e.to_string())?;
    let synth = synthesize_differentiated_tolls(net, &opt, &TollSynthesisConfig::default())
        .map_err(|e| e.to_string())?;
    let set = enumerate_equilibria(net, d, &synth.scheme).map_err(|e| e.to_string())?;
    if set.equilibria.is_empty() {
        return Err("no isolated equilibrium under synthesized tolls".into());
    }
    for e in &set.equilibria {
        if (e.cost - opt.cost).abs() > tol {
            return Err(format!(
                "equilibrium cost {} vs optimum {} (pattern {:?})",
                e.cost, opt.cost, e.pattern
            ));
        }
    }
    Ok(())
}

/// Empirical autonomy ratio stays under `k / (1 - 1/4)`.
pub fn check_autonomy_bound(net: &Network, d: &Demand) -> Result<(f64, f64), String> {
    let total = d.total();
    let r = empirical_autonomy_ratio(net, total, d.human / total).map_err(|e| e.to_string())?;
    let bound = price_of_autonomy_bound(network_asymmetry(net), 1).map_err(|e| e.to_string())?;
    if !r.bound_applies {
        return Err("instance has a road with k < 1".into());
    }
    if r.ratio > bound * (1.0 + 1e-12) {
        return Err(format!("ratio {} exceeds bound {}", r.ratio, bound));
    }
    Ok((r.ratio, bound))
}

/// Finest of the candidate resolutions whose grid stays affordable.
pub fn oracle_resolution(n: usize) -> f64 {
    match n {
        1 | 2 => 0.01,
        3 => 0.02,
        _ => 0.05,
    }
}

/// Enumeration optimum agrees with the brute-force grid within its gap.
pub fn check_oracle_agreement(net: &Network, d: &Demand) -> Result<(), String> {
    let opt = optimal_routing(net, d).map_err(|e| e.to_string())?;
    let grid = grid_oracle(net, d, oracle_resolution(net.len())).map_err(|e| e.to_string())?;
    let slack = 1e-9 * grid.cost.abs().max(1.0);
    if opt.cost > grid.cost + slack {
        return Err(format!("optimum {} above grid point {}", opt.cost, grid.cost));
    }
    if grid.cost - opt.cost > grid.gap_bound + slack {
        return Err(format!(
            "grid {} exceeds optimum {} by more than gap {}",
            grid.cost, opt.cost, grid.gap_bound
        ));
    }
    Ok(())
}

/// Pair Hessian determinant equals `-(a_i(k_i-1) + a_j(k_j-1))²`, relative
/// to the magnitude of the products involved.
pub fn check_hessian_identity(net: &Network) -> Result<(), String> {
    for ri in net.roads() {
        for rj in net.roads() {
            let h = road_pair_hessian(ri, rj);
            let closed = pair_hessian_determinant(ri, rj);
            let [[hh, ha], [_, aa]] = h.matrix;
            let scale = (hh * aa).abs().max(ha * ha).max(1.0);
            if (h.determinant - closed).abs() > 1e-12 * scale {
                return Err(format!("det {} vs closed form {}", h.determinant, closed));
            }
        }
    }
    Ok(())
}

/// Analytic marginal costs match central differences of the social cost.
pub fn check_finite_differences<R: Rng>(net: &Network, d: &Demand, rng: &mut R) -> Result<(), String> {
    let n = net.len();
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen_range(0.0..=d.human), rng.gen_range(0.0..=d.autonomous)))
        .collect();
    let eps = 1e-6;
    let cost_at = |p: &[(f64, f64)]| {
        social_cost(net, &FlowProfile::from_pairs(p).expect("nonnegative")).expect("lengths match")
    };
    for i in 0..n {
        let (gh, ga) = marginal_costs(net.road(i), pairs[i].0, pairs[i].1);
        for (class, analytic) in [(0, gh), (1, ga)] {
            let mut up = pairs.clone();
            let mut down = pairs.clone();
            let bump = |p: &mut (f64, f64), delta: f64| {
                if class == 0 {
                    p.0 += delta;
                } else {
                    p.1 += delta;
                }
            };
            bump(&mut up[i], eps);
            // Stay in the nonnegative orthant with a one-sided difference near zero.
            let lower = if class == 0 { pairs[i].0 } else { pairs[i].1 };
            let (numeric, kind) = if lower >= eps {
                bump(&mut down[i], -eps);
                ((cost_at(&up) - cost_at(&down)) / (2.0 * eps), "central")
            } else {
                ((cost_at(&up) - cost_at(&pairs)) / eps, "forward")
            };
            // A forward difference of a quadratic errs by half the curvature times eps.
            let tol = if kind == "central" { 1e-5 } else { 1e-5 + 50.0 * eps };
            if (numeric - analytic).abs() > tol {
                return Err(format!(
                    "road {i} class {class}: analytic {analytic} vs {kind} {numeric}"
                ));
            }
        }
    }
    Ok(())
}

pub fn arb_road() -> impl proptest::strategy::Strategy<Value = mixtoll::Road> {
    use proptest::prelude::*;
    (0.1f64..5.0, 0.1f64..5.0, 0.0f64..5.0).prop_map(|(a, k, t)| mixtoll::Road::new(a, k, t).unwrap())
}

/// Random network with `1..=max_roads` roads and positive demand of both classes.
pub fn arb_instance(max_roads: usize) -> impl proptest::strategy::Strategy<Value = (Network, Demand)> {
    use proptest::prelude::*;
    (
        proptest::collection::vec(arb_road(), 1..=max_roads),
        0.1f64..5.0,
        0.1f64..5.0,
    )
        .prop_map(|(roads, h, a)| (Network::new(roads).unwrap(), Demand::new(h, a).unwrap()))
}
