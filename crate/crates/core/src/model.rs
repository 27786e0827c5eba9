//! Network data model: roads with two-class affine latencies, demands,
//! flow profiles and toll schemes.
//!
//! A road's latency is `k·a·f_h + a·f_a + t`, where `f_h` is human-driven
//! flow and `f_a` autonomous flow. Human vehicles congest the road `k`
//! times as much as autonomous ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::SupportPattern;

/// Absolute tolerance on demand conservation.
pub const CONSERVATION_TOL: f64 = 1e-9;

/// Tolerance used when deciding whether a road's asymmetry factor equals one.
pub const UNIT_ASYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleClass {
    Human,
    Autonomous,
}

impl std::fmt::Display for VehicleClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VehicleClass::Human => "human",
            VehicleClass::Autonomous => "autonomous",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Road {
    /// Delay per unit of autonomous flow.
    pub a: f64,
    /// Human asymmetry factor.
    pub k: f64,
    /// Free-flow latency.
    pub t: f64,
}

impl Road {
    pub fn new(a: f64, k: f64, t: f64) -> Result<Self> {
        let road = Road { a, k, t };
        road.validate(0)?;
        Ok(road)
    }

    pub(crate) fn validate(&self, index: usize) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidRoad { road: index, reason });
        if !(self.a.is_finite() && self.a > 0.0) {
            return bad(format!("a must be finite and > 0, got {}", self.a));
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return bad(format!("k must be finite and > 0, got {}", self.k));
        }
        if !(self.t.is_finite() && self.t >= 0.0) {
            return bad(format!("t must be finite and >= 0, got {}", self.t));
        }
        Ok(())
    }

    /// Human-flow coefficient `k·a`.
    #[inline]
    pub fn human_coef(&self) -> f64 {
        self.k * self.a
    }

    /// Latency without argument checks.
    #[inline]
    pub fn delay(&self, f_h: f64, f_a: f64) -> f64 {
        self.k * self.a * f_h + self.a * f_a + self.t
    }

    /// Contribution `(f_h + f_a)·ℓ(f_h, f_a)` of this road to social cost.
    #[inline]
    pub fn cost(&self, f_h: f64, f_a: f64) -> f64 {
        (f_h + f_a) * self.delay(f_h, f_a)
    }

    /// Whether `k` is one within [`UNIT_ASYMMETRY_TOL`].
    pub fn is_symmetric(&self) -> bool {
        (self.k - 1.0).abs() <= UNIT_ASYMMETRY_TOL
    }
}

/// Parallel roads between a single source and sink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Road>", into = "Vec<Road>")]
pub struct Network {
    roads: Vec<Road>,
}

impl Network {
    pub fn new(roads: Vec<Road>) -> Result<Self> {
        if roads.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        for (i, road) in roads.iter().enumerate() {
            road.validate(i)?;
        }
        Ok(Network { roads })
    }

    pub fn roads(&self) -> &[Road] {
        &self.roads
    }

    pub fn len(&self) -> usize {
        self.roads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roads.is_empty()
    }

    pub fn road(&self, i: usize) -> &Road {
        &self.roads[i]
    }

    /// Number of roads with `k = 1`.
    pub fn symmetric_road_count(&self) -> usize {
        self.roads.iter().filter(|r| r.is_symmetric()).count()
    }

    pub fn min_free_flow(&self) -> f64 {
        self.roads.iter().map(|r| r.t).fold(f64::INFINITY, f64::min)
    }
}

impl TryFrom<Vec<Road>> for Network {
    type Error = Error;

    fn try_from(roads: Vec<Road>) -> Result<Self> {
        Network::new(roads)
    }
}

impl From<Network> for Vec<Road> {
    fn from(n: Network) -> Self {
        n.roads
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Demand {
    pub human: f64,
    pub autonomous: f64,
}

impl Demand {
    pub fn new(human: f64, autonomous: f64) -> Result<Self> {
        let d = Demand { human, autonomous };
        d.validate()?;
        Ok(d)
    }

    /// Checks both components are finite, nonnegative and not both zero.
    pub fn validate(&self) -> Result<()> {
        let err = |reason| Error::InvalidDemand {
            human: self.human,
            autonomous: self.autonomous,
            reason,
        };
        if !(self.human.is_finite() && self.autonomous.is_finite()) {
            return Err(err("components must be finite"));
        }
        if self.human < 0.0 || self.autonomous < 0.0 {
            return Err(err("components must be nonnegative"));
        }
        if self.human == 0.0 && self.autonomous == 0.0 {
            return Err(err("at least one component must be positive"));
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.human + self.autonomous
    }
}

/// Flow of each class on one road.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadFlow {
    pub human: f64,
    pub autonomous: f64,
}

impl RoadFlow {
    pub fn new(human: f64, autonomous: f64) -> Self {
        RoadFlow { human, autonomous }
    }

    pub fn total(&self) -> f64 {
        self.human + self.autonomous
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<RoadFlow>", into = "Vec<RoadFlow>")]
pub struct FlowProfile {
    flows: Vec<RoadFlow>,
}

impl FlowProfile {
    /// Builds a profile, rejecting negative or non-finite entries.
    pub fn new(flows: Vec<RoadFlow>) -> Result<Self> {
        for f in &flows {
            for v in [f.human, f.autonomous] {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::NegativeFlow { value: v });
                }
            }
        }
        Ok(FlowProfile { flows })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(h, a)| RoadFlow::new(h, a)).collect())
    }

    /// All-zero profile on `n` roads.
    pub fn zeros(n: usize) -> Self {
        FlowProfile {
            flows: vec![RoadFlow::default(); n],
        }
    }

    /// Assembles a profile from solver output, clamping roundoff-level
    /// negatives to zero.
    pub(crate) fn from_solver(human: Vec<f64>, autonomous: Vec<f64>) -> Self {
        let flows = human
            .into_iter()
            .zip(autonomous)
            .map(|(h, a)| RoadFlow::new(h.max(0.0), a.max(0.0)))
            .collect();
        FlowProfile { flows }
    }

    pub fn flows(&self) -> &[RoadFlow] {
        &self.flows
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn human_total(&self) -> f64 {
        self.flows.iter().map(|f| f.human).sum()
    }

    pub fn autonomous_total(&self) -> f64 {
        self.flows.iter().map(|f| f.autonomous).sum()
    }

    /// Checks road count and demand conservation.
    pub fn validate_for(&self, network: &Network, demand: &Demand) -> Result<()> {
        self.validate_for_within(network, demand, CONSERVATION_TOL)
    }

    /// Like [`FlowProfile::validate_for`] with an explicit conservation
    /// tolerance.
    pub fn validate_for_within(&self, network: &Network, demand: &Demand, tol: f64) -> Result<()> {
        if self.len() != network.len() {
            return Err(Error::LengthMismatch {
                expected: network.len(),
                got: self.len(),
            });
        }
        let h = self.human_total();
        if (h - demand.human).abs() > tol {
            return Err(Error::DemandMismatch {
                class: "human",
                expected: demand.human,
                got: h,
            });
        }
        let a = self.autonomous_total();
        if (a - demand.autonomous).abs() > tol {
            return Err(Error::DemandMismatch {
                class: "autonomous",
                expected: demand.autonomous,
                got: a,
            });
        }
        Ok(())
    }

    /// Strict support at [`SUPPORT_TOL`](crate::pattern::SUPPORT_TOL).
    pub fn support(&self) -> SupportPattern {
        let h: Vec<f64> = self.flows.iter().map(|f| f.human).collect();
        let a: Vec<f64> = self.flows.iter().map(|f| f.autonomous).collect();
        SupportPattern::of_flows(&h, &a)
    }

    /// Largest per-entry absolute difference between two profiles.
    pub fn max_abs_diff(&self, other: &FlowProfile) -> f64 {
        self.flows
            .iter()
            .zip(&other.flows)
            .map(|(x, y)| (x.human - y.human).abs().max((x.autonomous - y.autonomous).abs()))
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<RoadFlow>> for FlowProfile {
    type Error = Error;

    fn try_from(flows: Vec<RoadFlow>) -> Result<Self> {
        FlowProfile::new(flows)
    }
}

impl From<FlowProfile> for Vec<RoadFlow> {
    fn from(p: FlowProfile) -> Self {
        p.flows
    }
}

/// Toll charged to each class on one road. Negative values are subsidies.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadToll {
    pub human: f64,
    pub autonomous: f64,
}

impl RoadToll {
    pub fn new(human: f64, autonomous: f64) -> Self {
        RoadToll { human, autonomous }
    }

    pub fn uniform(value: f64) -> Self {
        RoadToll {
            human: value,
            autonomous: value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TollScheme {
    tolls: Vec<RoadToll>,
}

impl TollScheme {
    pub fn new(tolls: Vec<RoadToll>) -> Self {
        TollScheme { tolls }
    }

    pub fn zero(n: usize) -> Self {
        TollScheme {
            tolls: vec![RoadToll::default(); n],
        }
    }

    /// Same toll for both classes on every road.
    pub fn undifferentiated(values: &[f64]) -> Self {
        TollScheme {
            tolls: values.iter().map(|&v| RoadToll::uniform(v)).collect(),
        }
    }

    pub fn tolls(&self) -> &[RoadToll] {
        &self.tolls
    }

    pub fn len(&self) -> usize {
        self.tolls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tolls.is_empty()
    }

    pub fn is_undifferentiated(&self) -> bool {
        self.tolls.iter().all(|t| t.human == t.autonomous)
    }

    /// Adds `c` to every toll of both classes.
    pub fn shifted(&self, c: f64) -> Self {
        TollScheme {
            tolls: self
                .tolls
                .iter()
                .map(|t| RoadToll::new(t.human + c, t.autonomous + c))
                .collect(),
        }
    }

    pub fn check_len(&self, network: &Network) -> Result<()> {
        if self.len() != network.len() {
            return Err(Error::LengthMismatch {
                expected: network.len(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

fn check_flows(f_h: f64, f_a: f64) -> Result<()> {
    for v in [f_h, f_a] {
        if v.is_nan() || v < 0.0 {
            return Err(Error::NegativeFlow { value: v });
        }
    }
    Ok(())
}

/// Road latency `k·a·f_h + a·f_a + t`.
pub fn latency(road: &Road, f_h: f64, f_a: f64) -> Result<f64> {
    check_flows(f_h, f_a)?;
    Ok(road.delay(f_h, f_a))
}

/// Cost experienced by a user of one class: latency plus that class's toll.
pub fn class_cost(road: &Road, f_h: f64, f_a: f64, toll: f64) -> Result<f64> {
    Ok(latency(road, f_h, f_a)? + toll)
}

/// Total experienced delay `Σ (f_h + f_a)·ℓ(f_h, f_a)`. Tolls are transfers
/// and do not enter.
pub fn social_cost(network: &Network, flow: &FlowProfile) -> Result<f64> {
    if flow.len() != network.len() {
        return Err(Error::LengthMismatch {
            expected: network.len(),
            got: flow.len(),
        });
    }
    Ok(network
        .roads()
        .iter()
        .zip(flow.flows())
        .map(|(r, f)| r.cost(f.human, f.autonomous))
        .sum())
}
