//! Social-cost-minimizing routings.
//!
//! Social cost is an indefinite quadratic (the Hessian of any two-road
//! exchange has negative determinant unless both roads are symmetric), so
//! convex solvers do not apply. Instead every support structure is
//! enumerated and its linear stationarity system solved. When at most one
//! road has `k = 1`, an optimal routing shares at most one road between the
//! classes, which prunes structures with two or more mixed roads.
//!
//! [`grid_oracle`] is an independent brute-force minimizer used for
//! cross-checking.

use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::ENUMERATION_CAP;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::model::{social_cost, Demand, FlowProfile, Network, Road};
use crate::pattern::{
    class_masks, solve_pattern, support_positive, PatternCoefficients, PatternSolve,
    SupportPattern,
};

/// Slack allowed on off-support marginal cost inequalities.
pub const MULTIPLIER_TOL: f64 = 1e-8;

/// Largest grid the oracle will evaluate.
pub const GRID_POINT_LIMIT: f64 = 2e8;

/// Stationarity multipliers: the common marginal social cost of each class
/// on its support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Multipliers {
    pub human: Option<f64>,
    pub autonomous: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimumResult {
    pub flow: FlowProfile,
    pub cost: f64,
    pub mixed_roads: Vec<usize>,
    pub pattern: SupportPattern,
    pub multipliers: Multipliers,
    /// False when more than one road has `k = 1`; the search then covers
    /// every structure and the one-mixed-road property is not guaranteed.
    pub separation_guaranteed: bool,
    pub candidates_examined: usize,
    pub degenerate_candidates: usize,
}

/// Gradient `(∂C/∂f_h, ∂C/∂f_a)` of one road's social cost contribution.
pub fn marginal_costs(road: &Road, f_h: f64, f_a: f64) -> (f64, f64) {
    let Road { a, k, t } = *road;
    (
        2.0 * k * a * f_h + a * (1.0 + k) * f_a + t,
        a * (1.0 + k) * f_h + 2.0 * a * f_a + t,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairHessian {
    pub matrix: [[f64; 2]; 2],
    pub determinant: f64,
}

/// Hessian of the cost of two roads with fixed combined flows, as a
/// function of the human and autonomous flow on the first.
pub fn road_pair_hessian(ri: &Road, rj: &Road) -> PairHessian {
    let hh = 2.0 * ri.a * ri.k + 2.0 * rj.a * rj.k;
    let ha = (ri.k + 1.0) * ri.a + (rj.k + 1.0) * rj.a;
    let aa = 2.0 * ri.a + 2.0 * rj.a;
    let m = DenseMatrix::from_rows(&[&[hh, ha], &[ha, aa]]);
    PairHessian {
        matrix: [[hh, ha], [ha, aa]],
        determinant: m.det_2x2(),
    }
}

/// Closed form of the pair Hessian determinant, `-(a_i(k_i-1) + a_j(k_j-1))²`.
pub fn pair_hessian_determinant(ri: &Road, rj: &Road) -> f64 {
    let s = ri.a * (ri.k - 1.0) + rj.a * (rj.k - 1.0);
    -(s * s)
}

/// Roads carrying more than `tol` of both classes.
pub fn count_mixed_roads(flow: &FlowProfile, tol: f64) -> usize {
    flow.flows()
        .iter()
        .filter(|f| f.human > tol && f.autonomous > tol)
        .count()
}

struct StationarityCoefficients<'a>(&'a Network);

impl PatternCoefficients for StationarityCoefficients<'_> {
    fn block(&self, i: usize) -> [[f64; 2]; 2] {
        let Road { a, k, .. } = *self.0.road(i);
        let cross = a * (1.0 + k);
        [[2.0 * k * a, cross], [cross, 2.0 * a]]
    }

    fn offset_human(&self, i: usize) -> f64 {
        self.0.road(i).t
    }

    fn offset_autonomous(&self, i: usize) -> f64 {
        self.0.road(i).t
    }
}

enum Candidate {
    Feasible(OptimumResult),
    Infeasible,
    Degenerate,
}

fn solve_candidate(network: &Network, demand: &Demand, pattern: &SupportPattern) -> Candidate {
    let sol = match solve_pattern(&StationarityCoefficients(network), network.len(), demand, pattern)
    {
        PatternSolve::Solved(s) => s,
        PatternSolve::Degenerate => return Candidate::Degenerate,
        PatternSolve::Inconsistent => return Candidate::Infeasible,
    };
    if !support_positive(&sol, pattern) {
        return Candidate::Infeasible;
    }
    let h_mask = pattern.human_mask();
    let a_mask = pattern.autonomous_mask();
    for (i, road) in network.roads().iter().enumerate() {
        let (mh, ma) = marginal_costs(road, sol.human[i], sol.autonomous[i]);
        if let Some(nu) = sol.lambda_h {
            if h_mask & (1 << i) == 0 && mh < nu - MULTIPLIER_TOL {
                return Candidate::Infeasible;
            }
        }
        if let Some(nu) = sol.lambda_a {
            if a_mask & (1 << i) == 0 && ma < nu - MULTIPLIER_TOL {
                return Candidate::Infeasible;
            }
        }
    }
    let flow = FlowProfile::from_solver(sol.human, sol.autonomous);
    let cost = social_cost(network, &flow).expect("lengths match");
    Candidate::Feasible(OptimumResult {
        mixed_roads: pattern.mixed(),
        flow,
        cost,
        pattern: pattern.clone(),
        multipliers: Multipliers {
            human: sol.lambda_h,
            autonomous: sol.lambda_a,
        },
        separation_guaranteed: true,
        candidates_examined: 0,
        degenerate_candidates: 0,
    })
}

pub fn optimal_routing(network: &Network, demand: &Demand) -> Result<OptimumResult> {
    optimal_routing_capped(network, demand, ENUMERATION_CAP)
}

/// Minimizes social cost by enumerating stationarity structures.
pub fn optimal_routing_capped(
    network: &Network,
    demand: &Demand,
    cap: usize,
) -> Result<OptimumResult> {
    demand.validate()?;
    let n = network.len();
    if n > cap {
        return Err(Error::TooManyRoads { roads: n, cap });
    }
    let guaranteed = network.symmetric_road_count() <= 1;
    let h_masks = class_masks(n, demand.human);
    let a_masks = class_masks(n, demand.autonomous);

    let per_mask: Vec<(Option<OptimumResult>, usize, usize)> = h_masks
        .par_iter()
        .map(|&mh| {
            let mut best: Option<OptimumResult> = None;
            let mut examined = 0;
            let mut degenerate = 0;
            for &ma in &a_masks {
                if guaranteed && (mh & ma).count_ones() > 1 {
                    continue;
                }
                examined += 1;
                let pattern = SupportPattern::from_masks(mh, ma);
                match solve_candidate(network, demand, &pattern) {
                    Candidate::Feasible(c) => {
                        if best.as_ref().is_none_or(|b| better(&c, b)) {
                            best = Some(c);
                        }
                    }
                    Candidate::Degenerate => degenerate += 1,
                    Candidate::Infeasible => {}
                }
            }
            (best, examined, degenerate)
        })
        .collect();

    let examined = per_mask.iter().map(|x| x.1).sum();
    let degenerate = per_mask.iter().map(|x| x.2).sum();
    let mut best = per_mask
        .into_iter()
        .filter_map(|x| x.0)
        .reduce(|b, c| if better(&c, &b) { c } else { b })
        .ok_or(Error::NoFeasibleCandidate)?;
    best.separation_guaranteed = guaranteed;
    best.candidates_examined = examined;
    best.degenerate_candidates = degenerate;
    Ok(best)
}

/// Lower cost wins; ties go to the lexicographically smaller
/// (mixed roads, human support, autonomous support).
fn better(c: &OptimumResult, b: &OptimumResult) -> bool {
    c.cost
        .total_cmp(&b.cost)
        .then_with(|| c.mixed_roads.cmp(&b.mixed_roads))
        .then_with(|| c.pattern.cmp(&b.pattern))
        .is_lt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridOptimum {
    pub flow: FlowProfile,
    pub cost: f64,
    /// Upper bound on `cost - true optimum`.
    pub gap_bound: f64,
    pub points: usize,
}

/// Number of ways to split `steps` units over `parts` roads.
fn composition_count(steps: usize, parts: usize) -> f64 {
    // C(steps + parts - 1, parts - 1)
    let mut c = 1.0;
    for i in 1..parts {
        c = c * (steps + i) as f64 / i as f64;
    }
    c
}

fn compositions(steps: usize, parts: usize, unit: f64) -> Vec<Vec<f64>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for x in 0..=left {
            cur.push(x);
            rec(left - x, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    rec(steps, parts, &mut Vec::with_capacity(parts), &mut raw);
    raw.into_iter()
        .map(|c| c.into_iter().map(|u| u as f64 * unit).collect())
        .collect()
}

/// Brute-force minimization of social cost over a grid that splits each
/// class's demand in multiples of `resolution · demand`.
///
/// The reported gap bound follows from exactness of the second-order
/// expansion around a stationary optimum: rounding the optimum to the grid
/// moves each class by at most one step per road and by at most
/// `2(n-1)` steps in total, with zero first-order change.
pub fn grid_oracle(network: &Network, demand: &Demand, resolution: f64) -> Result<GridOptimum> {
    demand.validate()?;
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::InvalidGrid(format!(
            "resolution must be in (0, 1], got {resolution}"
        )));
    }
    let n = network.len();
    let steps = (1.0 / resolution).round().max(1.0) as usize;
    let class_points = |d: f64| {
        if d > 0.0 {
            composition_count(steps, n)
        } else {
            1.0
        }
    };
    let estimate = class_points(demand.human) * class_points(demand.autonomous);
    if estimate > GRID_POINT_LIMIT {
        return Err(Error::GridTooLarge {
            points: estimate,
            limit: GRID_POINT_LIMIT,
        });
    }
    let split = |d: f64| {
        if d > 0.0 {
            compositions(steps, n, d / steps as f64)
        } else {
            vec![vec![0.0; n]]
        }
    };
    let human = split(demand.human);
    let autonomous = split(demand.autonomous);
    let roads = network.roads();

    let (cost, hi, ai) = human
        .par_iter()
        .enumerate()
        .map(|(hi, fh)| {
            let mut best = (f64::INFINITY, hi, 0);
            for (ai, fa) in autonomous.iter().enumerate() {
                let c: f64 = roads
                    .iter()
                    .zip(fh.iter().zip(fa))
                    .map(|(r, (&h, &a))| r.cost(h, a))
                    .sum();
                if c < best.0 {
                    best = (c, hi, ai);
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, usize::MAX, usize::MAX),
            |x, y| {
                if (y.0, y.1, y.2) < (x.0, x.1, x.2) {
                    y
                } else {
                    x
                }
            },
        );

    let flow = FlowProfile::from_solver(human[hi].clone(), autonomous[ai].clone());
    let step_h = demand.human / steps as f64;
    let step_a = demand.autonomous / steps as f64;
    let h_max = roads
        .iter()
        .map(|r| {
            let Road { a, k, .. } = *r;
            (2.0 * k * a).max(a * (1.0 + k)).max(2.0 * a)
        })
        .fold(0.0, f64::max);
    let gap_bound = h_max * (n as f64 - 1.0) * (step_h + step_a).powi(2);
    Ok(GridOptimum {
        flow,
        cost,
        gap_bound,
        points: human.len() * autonomous.len(),
    })
}
