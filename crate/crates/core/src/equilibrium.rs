//! Wardrop equilibria of the two-class routing game under per-class tolls.
//!
//! The game has no common potential, so equilibria are found by exhaustive
//! support enumeration: every (human support, autonomous support) pair fixes
//! a square linear system whose solution is kept when its support flows are
//! strictly positive and no unused road is cheaper for either class.
//! Rank-deficient patterns describe equilibrium continua and are reported
//! instead of solved.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{social_cost, Demand, CONSERVATION_TOL, FlowProfile, Network, TollScheme, VehicleClass};
use crate::pattern::{
    class_masks, solve_pattern, support_positive, PatternCoefficients, PatternSolve, SUPPORT_TOL,
};

pub use crate::pattern::SupportPattern;

/// Default maximum number of roads for exhaustive enumeration.
pub const ENUMERATION_CAP: usize = 12;

/// Slack allowed on the "unused roads cost no less" inequalities.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;

/// Flow profiles closer than this (max-abs) are the same equilibrium.
pub const DEDUP_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub flow: FlowProfile,
    /// Common human cost (latency plus toll); `None` when human demand is zero.
    pub lambda_h: Option<f64>,
    pub lambda_a: Option<f64>,
    pub pattern: SupportPattern,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatternOutcome {
    Equilibrium(EquilibriumResult),
    Infeasible,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumSet {
    /// Isolated equilibria sorted by social cost, then pattern.
    pub equilibria: Vec<EquilibriumResult>,
    /// Patterns whose system was rank deficient but consistent.
    pub degenerate: Vec<SupportPattern>,
    pub patterns_examined: usize,
}

struct WardropCoefficients<'a> {
    network: &'a Network,
    tolls: &'a TollScheme,
}

impl PatternCoefficients for WardropCoefficients<'_> {
    fn block(&self, i: usize) -> [[f64; 2]; 2] {
        let r = self.network.road(i);
        [[r.human_coef(), r.a], [r.human_coef(), r.a]]
    }

    fn offset_human(&self, i: usize) -> f64 {
        self.network.road(i).t + self.tolls.tolls()[i].human
    }

    fn offset_autonomous(&self, i: usize) -> f64 {
        self.network.road(i).t + self.tolls.tolls()[i].autonomous
    }
}

fn check_inputs(network: &Network, demand: &Demand, tolls: &TollScheme) -> Result<()> {
    demand.validate()?;
    tolls.check_len(network)
}

fn solve_unchecked(
    network: &Network,
    demand: &Demand,
    tolls: &TollScheme,
    pattern: &SupportPattern,
) -> PatternOutcome {
    let coefs = WardropCoefficients { network, tolls };
    let sol = match solve_pattern(&coefs, network.len(), demand, pattern) {
        PatternSolve::Solved(sol) => sol,
        PatternSolve::Degenerate => return PatternOutcome::Degenerate,
        PatternSolve::Inconsistent => return PatternOutcome::Infeasible,
    };
    if !support_positive(&sol, pattern) {
        return PatternOutcome::Infeasible;
    }
    let lh = sol.lambda_h.unwrap_or(f64::INFINITY);
    let la = sol.lambda_a.unwrap_or(f64::INFINITY);
    let h_mask = pattern.human_mask();
    let a_mask = pattern.autonomous_mask();
    for (i, (road, toll)) in network.roads().iter().zip(tolls.tolls()).enumerate() {
        let delay = road.delay(sol.human[i], sol.autonomous[i]);
        if sol.lambda_h.is_some() && h_mask & (1 << i) == 0 && delay + toll.human < lh - EQUILIBRIUM_TOL
        {
            return PatternOutcome::Infeasible;
        }
        if sol.lambda_a.is_some()
            && a_mask & (1 << i) == 0
            && delay + toll.autonomous < la - EQUILIBRIUM_TOL
        {
            return PatternOutcome::Infeasible;
        }
    }
    let flow = FlowProfile::from_solver(sol.human, sol.autonomous);
    let cost = social_cost(network, &flow).expect("lengths match");
    PatternOutcome::Equilibrium(EquilibriumResult {
        flow,
        lambda_h: sol.lambda_h,
        lambda_a: sol.lambda_a,
        pattern: pattern.clone(),
        cost,
    })
}

/// Solves the Wardrop equal-cost system for one support pattern.
pub fn solve_support_pattern(
    network: &Network,
    demand: &Demand,
    tolls: &TollScheme,
    pattern: &SupportPattern,
) -> Result<PatternOutcome> {
    check_inputs(network, demand, tolls)?;
    pattern.validate(network.len(), demand)?;
    Ok(solve_unchecked(network, demand, tolls, pattern))
}

pub fn enumerate_equilibria(
    network: &Network,
    demand: &Demand,
    tolls: &TollScheme,
) -> Result<EquilibriumSet> {
    enumerate_equilibria_capped(network, demand, tolls, ENUMERATION_CAP)
}

/// Enumerates all isolated equilibria over every support pattern.
pub fn enumerate_equilibria_capped(
    network: &Network,
    demand: &Demand,
    tolls: &TollScheme,
    cap: usize,
) -> Result<EquilibriumSet> {
    check_inputs(network, demand, tolls)?;
    let n = network.len();
    if n > cap {
        return Err(Error::TooManyRoads { roads: n, cap });
    }
    let h_masks = class_masks(n, demand.human);
    let a_masks = class_masks(n, demand.autonomous);

    // Ordered per human mask, so the merged output is schedule independent.
    let chunks: Vec<(Vec<EquilibriumResult>, Vec<SupportPattern>)> = h_masks
        .par_iter()
        .map(|&mh| {
            let mut found = Vec::new();
            let mut degenerate = Vec::new();
            for &ma in &a_masks {
                let pattern = SupportPattern::from_masks(mh, ma);
                match solve_unchecked(network, demand, tolls, &pattern) {
                    PatternOutcome::Equilibrium(eq) => found.push(eq),
                    PatternOutcome::Degenerate => degenerate.push(pattern),
                    PatternOutcome::Infeasible => {}
                }
            }
            (found, degenerate)
        })
        .collect();

    let mut candidates = Vec::new();
    let mut degenerate = Vec::new();
    for (eqs, degs) in chunks {
        candidates.extend(eqs);
        degenerate.extend(degs);
    }
    degenerate.sort();
    candidates.sort_by(|x, y| x.cost.total_cmp(&y.cost).then_with(|| x.pattern.cmp(&y.pattern)));

    Ok(EquilibriumSet {
        equilibria: dedup(candidates),
        degenerate,
        patterns_examined: h_masks.len() * a_masks.len(),
    })
}

/// Merges candidates that describe the same flow, preferring the one whose
/// pattern is the strict support of its flow.
fn dedup(candidates: Vec<EquilibriumResult>) -> Vec<EquilibriumResult> {
    let mut kept: Vec<EquilibriumResult> = Vec::new();
    for c in candidates {
        match kept
            .iter_mut()
            .find(|k| k.flow.max_abs_diff(&c.flow) < DEDUP_TOL)
        {
            Some(k) => {
                if k.pattern != k.flow.support() && c.pattern == c.flow.support() {
                    *k = c;
                }
            }
            None => kept.push(c),
        }
    }
    kept
}

/// Maximum-cost isolated equilibrium.
pub fn worst_equilibrium(
    network: &Network,
    demand: &Demand,
    tolls: &TollScheme,
) -> Result<EquilibriumResult> {
    let set = enumerate_equilibria(network, demand, tolls)?;
    let EquilibriumSet {
        mut equilibria,
        degenerate,
        ..
    } = set;
    // Highest cost; among equal costs the lexicographically smallest pattern.
    let idx = (0..equilibria.len()).max_by(|&i, &j| {
        equilibria[i]
            .cost
            .total_cmp(&equilibria[j].cost)
            .then_with(|| equilibria[j].pattern.cmp(&equilibria[i].pattern))
    });
    match idx {
        Some(i) => Ok(equilibria.swap_remove(i)),
        None => Err(Error::NoIsolatedEquilibrium { degenerate }),
    }
}

/// Minimum-cost isolated equilibrium.
pub fn best_equilibrium(
    network: &Network,
    demand: &Demand,
    tolls: &TollScheme,
) -> Result<EquilibriumResult> {
    let set = enumerate_equilibria(network, demand, tolls)?;
    let EquilibriumSet {
        equilibria,
        degenerate,
        ..
    } = set;
    equilibria
        .into_iter()
        .next()
        .ok_or(Error::NoIsolatedEquilibrium { degenerate })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub road: usize,
    pub class: VehicleClass,
    /// How much more a user on this road pays than on the cheapest road.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    pub holds: bool,
    /// Cheapest class cost over all roads; `None` for a class without demand.
    pub lambda_h: Option<f64>,
    pub lambda_a: Option<f64>,
    pub violations: Vec<Violation>,
}

/// Checks the Wardrop conditions: every used road of a class costs no more
/// than the cheapest road for that class, within `tol`.
///
/// Demand conservation is checked at `max(tol, CONSERVATION_TOL)`, so flows
/// rounded to a few decimals can be verified at a matching tolerance.
pub fn verify_equilibrium(
    network: &Network,
    demand: &Demand,
    tolls: &TollScheme,
    flow: &FlowProfile,
    tol: f64,
) -> Result<Verification> {
    check_inputs(network, demand, tolls)?;
    flow.validate_for_within(network, demand, tol.max(CONSERVATION_TOL))?;

    let mut violations = Vec::new();
    let mut lambdas = [None, None];
    for (slot, class) in [VehicleClass::Human, VehicleClass::Autonomous]
        .into_iter()
        .enumerate()
    {
        let class_demand = match class {
            VehicleClass::Human => demand.human,
            VehicleClass::Autonomous => demand.autonomous,
        };
        if class_demand <= 0.0 {
            continue;
        }
        let costs: Vec<(f64, f64)> = network
            .roads()
            .iter()
            .zip(flow.flows())
            .zip(tolls.tolls())
            .map(|((r, f), t)| {
                let delay = r.delay(f.human, f.autonomous);
                match class {
                    VehicleClass::Human => (f.human, delay + t.human),
                    VehicleClass::Autonomous => (f.autonomous, delay + t.autonomous),
                }
            })
            .collect();
        let cheapest = costs.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        lambdas[slot] = Some(cheapest);
        for (road, &(used, cost)) in costs.iter().enumerate() {
            let slack = cost - cheapest;
            if used > SUPPORT_TOL && slack > tol {
                violations.push(Violation { road, class, slack });
            }
        }
    }
    Ok(Verification {
        holds: violations.is_empty(),
        lambda_h: lambdas[0],
        lambda_a: lambdas[1],
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Road;

    fn two_road(k: f64) -> Network {
        Network::new(vec![Road::new(1.0, k, 0.0).unwrap(), Road::new(k, 1.0 / k, 0.0).unwrap()])
            .unwrap()
    }

    fn three_road() -> Network {
        Network::new(vec![
            Road::new(1.0, 4.0, 0.5).unwrap(),
            Road::new(1.0, 2.0, 1.0).unwrap(),
            Road::new(3.0, 1.0 / 3.0, 0.5).unwrap(),
        ])
        .unwrap()
    }

    fn unit() -> Demand {
        Demand::new(1.0, 1.0).unwrap()
    }

    fn eq(outcome: PatternOutcome) -> EquilibriumResult {
        match outcome {
            PatternOutcome::Equilibrium(e) => e,
            other => panic!("expected equilibrium, got {other:?}"),
        }
    }

    #[test]
    fn two_road_separated_pattern_best() {
        let p = SupportPattern::new(vec![1], vec![0]);
        let e = eq(solve_support_pattern(&two_road(2.0), &unit(), &TollScheme::zero(2), &p).unwrap());
        let f = e.flow.flows();
        assert!((f[0].human).abs() < 1e-12 && (f[1].human - 1.0).abs() < 1e-12);
        assert!((f[0].autonomous - 1.0).abs() < 1e-12 && f[1].autonomous.abs() < 1e-12);
        assert!((e.lambda_h.unwrap() - 1.0).abs() < 1e-12);
        assert!((e.lambda_a.unwrap() - 1.0).abs() < 1e-12);
        assert!((e.cost - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_road_separated_pattern_worst() {
        let p = SupportPattern::new(vec![0], vec![1]);
        let e = eq(solve_support_pattern(&two_road(2.0), &unit(), &TollScheme::zero(2), &p).unwrap());
        assert!((e.lambda_h.unwrap() - 2.0).abs() < 1e-12);
        assert!((e.lambda_a.unwrap() - 2.0).abs() < 1e-12);
        assert!((e.cost - 4.0).abs() < 1e-12);
    }

    #[test]
    fn two_road_full_support_is_degenerate() {
        let p = SupportPattern::new(vec![0, 1], vec![0, 1]);
        let out = solve_support_pattern(&two_road(2.0), &unit(), &TollScheme::zero(2), &p).unwrap();
        assert_eq!(out, PatternOutcome::Degenerate);
    }

    #[test]
    fn invalid_pattern_rejected() {
        let p = SupportPattern::new(vec![], vec![0]);
        assert!(matches!(
            solve_support_pattern(&two_road(2.0), &unit(), &TollScheme::zero(2), &p),
            Err(Error::InvalidPattern(_))
        ));
    }

    #[test]
    fn two_road_enumeration_and_extremes() {
        let set = enumerate_equilibria(&two_road(2.0), &unit(), &TollScheme::zero(2)).unwrap();
        let costs: Vec<f64> = set.equilibria.iter().map(|e| e.cost).collect();
        assert!(costs.iter().any(|c| (c - 2.0).abs() < 1e-9));
        assert!(costs.iter().any(|c| (c - 4.0).abs() < 1e-9));
        assert!(!set.degenerate.is_empty());
        assert_eq!(set.patterns_examined, 9);
        let worst = worst_equilibrium(&two_road(2.0), &unit(), &TollScheme::zero(2)).unwrap();
        let best = best_equilibrium(&two_road(2.0), &unit(), &TollScheme::zero(2)).unwrap();
        assert!((worst.cost - 4.0).abs() < 1e-9);
        assert!((best.cost - 2.0).abs() < 1e-9);
    }

    #[test]
    fn single_road_has_one_equilibrium() {
        let n = Network::new(vec![Road::new(2.0, 3.0, 1.0).unwrap()]).unwrap();
        let d = Demand::new(0.7, 1.3).unwrap();
        let set = enumerate_equilibria(&n, &d, &TollScheme::zero(1)).unwrap();
        assert_eq!(set.equilibria.len(), 1);
        let f = set.equilibria[0].flow.flows()[0];
        assert!((f.human - 0.7).abs() < 1e-12 && (f.autonomous - 1.3).abs() < 1e-12);
    }

    #[test]
    fn three_road_contains_worst_equilibrium() {
        let d = Demand::new(2.625, 2.5).unwrap();
        let set = enumerate_equilibria(&three_road(), &d, &TollScheme::zero(3)).unwrap();
        let target = FlowProfile::from_pairs(&[(1.125, 0.0), (1.5, 1.0), (0.0, 1.5)]).unwrap();
        let hit = set
            .equilibria
            .iter()
            .find(|e| e.flow.max_abs_diff(&target) < 1e-9)
            .expect("worst equilibrium present");
        assert!((hit.cost - 25.625).abs() < 1e-9);
        assert!((hit.lambda_h.unwrap() - 5.0).abs() < 1e-9);
        assert!((hit.lambda_a.unwrap() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn cap_is_enforced() {
        let roads = vec![Road::new(1.0, 2.0, 0.0).unwrap(); 3];
        let n = Network::new(roads).unwrap();
        let err = enumerate_equilibria_capped(&n, &unit(), &TollScheme::zero(3), 2).unwrap_err();
        assert_eq!(err, Error::TooManyRoads { roads: 3, cap: 2 });
    }

    #[test]
    fn verify_three_road_flows() {
        let d = Demand::new(2.625, 2.5).unwrap();
        let worst = FlowProfile::from_pairs(&[(1.125, 0.0), (1.5, 1.0), (0.0, 1.5)]).unwrap();
        let v = verify_equilibrium(&three_road(), &d, &TollScheme::zero(3), &worst, 1e-6).unwrap();
        assert!(v.holds);
        assert!((v.lambda_h.unwrap() - 5.0).abs() < 1e-12);

        // These optimal flows are rounded to two decimals; human flow sums to 2.63.
        let opt = FlowProfile::from_pairs(&[(0.0, 1.65), (0.37, 0.85), (2.26, 0.0)]).unwrap();
        assert!(verify_equilibrium(&three_road(), &d, &TollScheme::zero(3), &opt, 1e-6).is_err());
        let v = verify_equilibrium(&three_road(), &d, &TollScheme::zero(3), &opt, 0.01).unwrap();
        assert!(!v.holds);
        assert!(v
            .violations
            .iter()
            .any(|x| x.road == 2 && x.class == VehicleClass::Human));
    }

    #[test]
    fn verify_rejects_malformed_flow() {
        let d = Demand::new(2.625, 2.5).unwrap();
        let short = FlowProfile::from_pairs(&[(2.625, 2.5)]).unwrap();
        assert!(verify_equilibrium(&three_road(), &d, &TollScheme::zero(3), &short, 1e-6).is_err());
    }

    #[test]
    fn empty_set_reports_degeneracy() {
        let err = Error::NoIsolatedEquilibrium {
            degenerate: vec![SupportPattern::new(vec![0], vec![0])],
        };
        assert!(err.to_string().contains("1 degenerate"));
    }
}
