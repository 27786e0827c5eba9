//! Two-class (human-driven / autonomous) routing on parallel roads with
//! heterogeneous affine latencies.
//!
//! - [`equilibrium`]: enumerate Wardrop equilibria under per-class tolls.
//! - [`social_optimum`]: exact social optimum by stationarity enumeration,
//!   plus a brute-force grid oracle.
//! - [`tolling`]: differentiated tolls that enforce the optimum, and
//!   undifferentiated toll search.
//! - [`bounds`]: price-of-autonomy bound.

pub mod bounds;
pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod linalg;
pub mod model;
pub mod pattern;
pub mod random;
pub mod social_optimum;
pub mod tolling;

pub use error::{Error, Result};
pub use model::{
    class_cost, latency, social_cost, Demand, FlowProfile, Network, Road, RoadFlow, RoadToll,
    TollScheme, VehicleClass,
};
