use thiserror::Error;

use crate::pattern::SupportPattern;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("network must contain at least one road")]
    EmptyNetwork,

    #[error("road {road}: {reason}")]
    InvalidRoad { road: usize, reason: String },

    #[error("negative flow {value} (flows must be nonnegative)")]
    NegativeFlow { value: f64 },

    #[error("invalid demand ({human}, {autonomous}): {reason}")]
    InvalidDemand {
        human: f64,
        autonomous: f64,
        reason: &'static str,
    },

    #[error("length mismatch: expected {expected} roads, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{class} flow sums to {got}, demand is {expected}")]
    DemandMismatch {
        class: &'static str,
        expected: f64,
        got: f64,
    },

    #[error("invalid support pattern: {0}")]
    InvalidPattern(String),

    #[error("network has {roads} roads; enumeration is capped at {cap}")]
    TooManyRoads { roads: usize, cap: usize },

    #[error(
        "no isolated equilibrium found ({} degenerate pattern(s) skipped)",
        degenerate.len()
    )]
    NoIsolatedEquilibrium { degenerate: Vec<SupportPattern> },

    #[error("no feasible stationarity candidate found")]
    NoFeasibleCandidate,

    #[error("grid has an estimated {points} points, above the limit of {limit}")]
    GridTooLarge { points: f64, limit: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("polynomial degree sigma must be >= 1, got {0}")]
    InvalidSigma(u32),

    #[error("asymmetry k must be >= 1, got {0}")]
    InvalidAsymmetry(f64),

    #[error("prohibitive toll {given} is below the required bound {required}")]
    ProhibitiveTollTooSmall { given: f64, required: f64 },

    #[error("{count} roads have k = 1; toll synthesis requires at most one")]
    MultipleSymmetricRoads { count: usize },

    #[error("optimal routing has {count} mixed roads; toll synthesis requires at most one")]
    TooManyMixedRoads { count: usize },
}
