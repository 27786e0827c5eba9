//! Toll design.
//!
//! Differentiated tolls steer each class onto the roads it uses in a chosen
//! optimal routing: a prohibitive toll `P` closes every road the class does
//! not use, and on the remaining roads the toll `μ - ℓ_i(f*)` makes every
//! used road cost exactly `μ`. Undifferentiated tolls (one toll per road for
//! both classes) are searched numerically, with a closed form for the
//! two-road asymmetric family.

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::{worst_equilibrium, EquilibriumResult};
use crate::error::{Error, Result};
use crate::model::{Demand, Network, RoadToll, TollScheme};
use crate::pattern::SUPPORT_TOL;
use crate::social_optimum::{count_mixed_roads, OptimumResult};

/// Largest network accepted by [`undiff_toll_search`].
pub const UNDIFF_SEARCH_MAX_ROADS: usize = 4;

/// Largest number of toll vectors [`undiff_toll_search`] will evaluate.
pub const UNDIFF_GRID_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TollSynthesisConfig {
    /// Common experienced cost on used roads; `None` picks [`default_mu`].
    pub mu: Option<f64>,
    /// Prohibitive toll; `None` picks [`default_prohibitive_toll`].
    pub prohibitive: Option<f64>,
}

impl TollSynthesisConfig {
    pub fn with_mu(mu: f64) -> Self {
        TollSynthesisConfig {
            mu: Some(mu),
            prohibitive: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesizedTolls {
    pub scheme: TollScheme,
    pub mu: f64,
    pub prohibitive: f64,
    /// Roads closed to human drivers (no human flow in the optimum).
    pub human_prohibited: Vec<bool>,
    /// Roads closed to autonomous vehicles.
    pub autonomous_prohibited: Vec<bool>,
}

/// Largest latency over roads used in the optimum. With this `μ` no
/// non-prohibitive toll is negative.
pub fn default_mu(network: &Network, optimum: &OptimumResult) -> f64 {
    network
        .roads()
        .iter()
        .zip(optimum.flow.flows())
        .filter(|(_, f)| f.total() > SUPPORT_TOL)
        .map(|(r, f)| r.delay(f.human, f.autonomous))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest prohibitive toll accepted for a given `μ`: a user on a closed
/// road then pays at least `t_i + P ≥ μ`.
pub fn required_prohibitive_toll(network: &Network, mu: f64) -> f64 {
    mu - network.min_free_flow()
}

/// `max(0, μ - min t) + 1`, strictly above the required bound.
pub fn default_prohibitive_toll(network: &Network, mu: f64) -> f64 {
    required_prohibitive_toll(network, mu).max(0.0) + 1.0
}

/// Builds the differentiated tolls that make `optimum` the essentially
/// unique equilibrium.
pub fn synthesize_differentiated_tolls(
    network: &Network,
    optimum: &OptimumResult,
    config: &TollSynthesisConfig,
) -> Result<SynthesizedTolls> {
    let n = network.len();
    if optimum.flow.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: optimum.flow.len(),
        });
    }
    let symmetric = network.symmetric_road_count();
    if symmetric > 1 {
        return Err(Error::MultipleSymmetricRoads { count: symmetric });
    }
    let mixed = count_mixed_roads(&optimum.flow, SUPPORT_TOL);
    if mixed > 1 {
        return Err(Error::TooManyMixedRoads { count: mixed });
    }

    let mu = config.mu.unwrap_or_else(|| default_mu(network, optimum));
    let required = required_prohibitive_toll(network, mu);
    let prohibitive = match config.prohibitive {
        Some(p) if p < required => {
            return Err(Error::ProhibitiveTollTooSmall { given: p, required })
        }
        Some(p) => p,
        None => default_prohibitive_toll(network, mu),
    };

    let mut tolls = Vec::with_capacity(n);
    let mut human_prohibited = Vec::with_capacity(n);
    let mut autonomous_prohibited = Vec::with_capacity(n);
    for (road, f) in network.roads().iter().zip(optimum.flow.flows()) {
        let open = mu - road.delay(f.human, f.autonomous);
        // Roads without a class's flow are closed to it; empty roads to both.
        let no_h = f.human <= SUPPORT_TOL;
        let no_a = f.autonomous <= SUPPORT_TOL;
        tolls.push(RoadToll::new(
            if no_h { prohibitive } else { open },
            if no_a { prohibitive } else { open },
        ));
        human_prohibited.push(no_h);
        autonomous_prohibited.push(no_a);
    }
    Ok(SynthesizedTolls {
        scheme: TollScheme::new(tolls),
        mu,
        prohibitive,
        human_prohibited,
        autonomous_prohibited,
    })
}

/// Best undifferentiated toll on the two-road network with latencies
/// `k·f_h + f_a` and `f_h + k·f_a`, unit demand per class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoRoadUndiffToll {
    /// Toll on road 1; road 2 is untolled.
    pub toll: f64,
    /// Human flow on road 1 in the resulting worst-case equilibrium.
    pub human_on_tolled_road: f64,
    pub cost: f64,
}

/// `(7k + 3)/4 - 1/(k + 1)`.
pub fn two_road_undiff_cost_closed_form(k: f64) -> f64 {
    (7.0 * k + 3.0) / 4.0 - 1.0 / (k + 1.0)
}

/// Minimizes the worst-case equilibrium cost over the toll on road 1.
///
/// In that equilibrium road 1 carries human flow `x` only and road 2 carries
/// `1 - x` humans plus all autonomous flow, so the cost is the quadratic
/// `(k+1)x² - (k+3)x + 2k + 2`, minimized at `x = (k+3) / (2(k+1))`. The
/// toll that equalizes human costs there is `(1+k)(1-x)`.
pub fn best_undifferentiated_toll_two_road(k: f64) -> Result<TwoRoadUndiffToll> {
    if !(k.is_finite() && k >= 1.0) {
        return Err(Error::InvalidAsymmetry(k));
    }
    let x = (k + 3.0) / (2.0 * (k + 1.0));
    let cost = (k + 1.0) * x * x - (k + 3.0) * x + 2.0 * k + 2.0;
    Ok(TwoRoadUndiffToll {
        toll: (1.0 + k) * (1.0 - x),
        human_on_tolled_road: x,
        cost,
    })
}

/// Toll values `lo, lo + step, …, hi` applied to every road but the last.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TollGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl TollGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
            return Err(Error::InvalidGrid("bounds and step must be finite".into()));
        }
        if hi < lo {
            return Err(Error::InvalidGrid(format!("upper bound {hi} below lower bound {lo}")));
        }
        if step <= 0.0 {
            return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
        }
        Ok(TollGrid { lo, hi, step })
    }

    pub fn values(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|j| self.lo + j as f64 * self.step).collect()
    }
}

impl FromStr for TollGrid {
    type Err = Error;

    /// Parses `lo:hi:step`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidGrid(format!("expected lo:hi:step, got {s:?}")));
        }
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidGrid(format!("{p:?}: {e}")))
        };
        TollGrid::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UndiffSearchResult {
    /// Grid-best toll per road (shared by both classes); the last is zero.
    pub tolls: Vec<f64>,
    pub worst_cost: f64,
    pub worst: EquilibriumResult,
    pub points_evaluated: usize,
    /// Toll vectors at which no isolated equilibrium exists.
    pub skipped: Vec<Vec<f64>>,
}

/// Minimizes the worst-case equilibrium cost over undifferentiated toll
/// vectors on a grid. Only toll differences matter on parallel roads, so
/// the last road's toll is pinned to zero.
pub fn undiff_toll_search(
    network: &Network,
    demand: &Demand,
    grid: &TollGrid,
) -> Result<UndiffSearchResult> {
    let n = network.len();
    if n > UNDIFF_SEARCH_MAX_ROADS {
        return Err(Error::TooManyRoads {
            roads: n,
            cap: UNDIFF_SEARCH_MAX_ROADS,
        });
    }
    let values = grid.values();
    let points = (values.len() as f64).powi(n as i32 - 1);
    if points > UNDIFF_GRID_LIMIT {
        return Err(Error::GridTooLarge {
            points,
            limit: UNDIFF_GRID_LIMIT,
        });
    }
    let points = points as usize;

    let toll_vector = |mut idx: usize| {
        let mut v = vec![0.0; n];
        for slot in v.iter_mut().take(n - 1) {
            *slot = values[idx % values.len()];
            idx /= values.len();
        }
        v
    };

    let outcomes: Vec<(Vec<f64>, Option<EquilibriumResult>)> = (0..points)
        .into_par_iter()
        .map(|p| {
            let tolls = toll_vector(p);
            let scheme = TollScheme::undifferentiated(&tolls);
            match worst_equilibrium(network, demand, &scheme) {
                Ok(w) => Ok((tolls, Some(w))),
                Err(Error::NoIsolatedEquilibrium { .. }) => Ok((tolls, None)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let mut skipped = Vec::new();
    let mut best: Option<(Vec<f64>, EquilibriumResult)> = None;
    for (tolls, worst) in outcomes {
        let Some(worst) = worst else {
            skipped.push(tolls);
            continue;
        };
        let improves = match &best {
            None => true,
            Some((bt, bw)) => worst
                .cost
                .total_cmp(&bw.cost)
                .then_with(|| cmp_vec(&tolls, bt))
                .is_lt(),
        };
        if improves {
            best = Some((tolls, worst));
        }
    }
    let (tolls, worst) = best.ok_or_else(|| Error::NoIsolatedEquilibrium {
        degenerate: Vec::new(),
    })?;
    Ok(UndiffSearchResult {
        tolls,
        worst_cost: worst.cost,
        worst,
        points_evaluated: points,
        skipped,
    })
}

fn cmp_vec(x: &[f64], y: &[f64]) -> std::cmp::Ordering {
    x.iter()
        .zip(y)
        .map(|(a, b)| a.total_cmp(b))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}
