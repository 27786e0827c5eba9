//! Price-of-autonomy bound and the empirical ratio it bounds.
//!
//! For latency polynomials of degree at most `σ` and road asymmetry at most
//! `k ≥ 1`, the cost of any mixed equilibrium is at most
//! `k^σ / (1 - ξ(σ))` times the cost of the all-human equilibrium at the
//! same total demand, where `ξ(σ) = σ (σ+1)^{-(σ+1)/σ}`.
//!
//! For affine roads the asymmetry of road i is its ratio of human to
//! autonomous latency coefficients, which is `k_i` in [`Road`](crate::model::Road).

use serde::Serialize;

use crate::equilibrium::worst_equilibrium;
use crate::error::{Error, Result};
use crate::model::{Demand, Network, TollScheme};

pub fn xi(sigma: u32) -> Result<f64> {
    if sigma < 1 {
        return Err(Error::InvalidSigma(sigma));
    }
    let s = sigma as f64;
    Ok(s * (s + 1.0).powf(-(s + 1.0) / s))
}

/// `k^σ / (1 - ξ(σ))`.
pub fn price_of_autonomy_bound(k: f64, sigma: u32) -> Result<f64> {
    if !(k.is_finite() && k >= 1.0) {
        return Err(Error::InvalidAsymmetry(k));
    }
    let xi = xi(sigma)?;
    Ok(k.powi(sigma as i32) / (1.0 - xi))
}

/// Maximum over roads of the human/autonomous latency coefficient ratio.
pub fn network_asymmetry(network: &Network) -> f64 {
    network
        .roads()
        .iter()
        .map(|r| r.k)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AutonomyRatio {
    /// Worst mixed equilibrium cost over all-human equilibrium cost.
    pub ratio: f64,
    pub mixed_cost: f64,
    pub human_only_cost: f64,
    /// Whether every road has asymmetry at least one, as the bound requires.
    pub bound_applies: bool,
}

/// Compares the worst untolled equilibrium at demand
/// `(h·total, (1-h)·total)` against the all-human equilibrium at `total`.
pub fn empirical_autonomy_ratio(
    network: &Network,
    total_demand: f64,
    human_fraction: f64,
) -> Result<AutonomyRatio> {
    if !(total_demand.is_finite() && total_demand > 0.0) {
        return Err(Error::InvalidDemand {
            human: total_demand * human_fraction,
            autonomous: total_demand * (1.0 - human_fraction),
            reason: "total demand must be positive",
        });
    }
    if !(0.0..=1.0).contains(&human_fraction) {
        return Err(Error::InvalidDemand {
            human: total_demand * human_fraction,
            autonomous: total_demand * (1.0 - human_fraction),
            reason: "human fraction must lie in [0, 1]",
        });
    }
    let no_tolls = TollScheme::zero(network.len());
    let all_human = Demand::new(total_demand, 0.0)?;
    let human_only_cost = worst_equilibrium(network, &all_human, &no_tolls)?.cost;
    let mixed = Demand::new(
        total_demand * human_fraction,
        total_demand * (1.0 - human_fraction),
    )?;
    let mixed_cost = worst_equilibrium(network, &mixed, &no_tolls)?.cost;
    Ok(AutonomyRatio {
        ratio: mixed_cost / human_only_cost,
        mixed_cost,
        human_only_cost,
        bound_applies: network.roads().iter().all(|r| r.k >= 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Road;

    #[test]
    fn xi_values() {
        // Reference values from 30-digit arithmetic.
        assert_eq!(xi(1).unwrap(), 0.25);
        assert!((xi(2).unwrap() - 0.384_900_179_459_750_5).abs() < 1e-14);
        assert!((xi(4).unwrap() - 0.534_992_243_981_137_6).abs() < 1e-14);
        assert!((xi(10).unwrap() - 0.715_266_765_633_429_3).abs() < 1e-14);
        assert_eq!(xi(0), Err(Error::InvalidSigma(0)));
    }

    #[test]
    fn bound_values() {
        assert!((price_of_autonomy_bound(1.0, 1).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((price_of_autonomy_bound(2.0, 1).unwrap() - 8.0 / 3.0).abs() < 1e-15);
        assert!((price_of_autonomy_bound(2.0, 2).unwrap() - 6.503_009_538_332_741).abs() < 1e-12);
        assert!(price_of_autonomy_bound(0.5, 1).is_err());
    }

    #[test]
    fn asymmetry_examples() {
        let three_road = Network::new(vec![
            Road::new(1.0, 4.0, 0.5).unwrap(),
            Road::new(1.0, 2.0, 1.0).unwrap(),
            Road::new(3.0, 1.0 / 3.0, 0.5).unwrap(),
        ])
        .unwrap();
        assert_eq!(network_asymmetry(&three_road), 4.0);
        let sym = Network::new(vec![Road::new(1.0, 1.0, 0.0).unwrap(); 3]).unwrap();
        assert_eq!(network_asymmetry(&sym), 1.0);
    }

    #[test]
    fn two_road_ratio() {
        let k = 2.0;
        let net =
            Network::new(vec![Road::new(1.0, k, 0.0).unwrap(), Road::new(k, 1.0 / k, 0.0).unwrap()])
                .unwrap();
        assert_eq!(network_asymmetry(&net), k);
        let r = empirical_autonomy_ratio(&net, 2.0, 0.5).unwrap();
        assert!((r.human_only_cost - 8.0 / 3.0).abs() < 1e-12);
        assert!((r.mixed_cost - 4.0).abs() < 1e-12);
        assert!((r.ratio - 1.5).abs() < 1e-12);
        assert!(r.ratio <= price_of_autonomy_bound(k, 1).unwrap());
        assert!(!r.bound_applies);

        let same = empirical_autonomy_ratio(&net, 2.0, 1.0).unwrap();
        assert!((same.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_argument_checks() {
        let net = Network::new(vec![Road::new(1.0, 1.0, 0.0).unwrap()]).unwrap();
        assert!(empirical_autonomy_ratio(&net, 0.0, 0.5).is_err());
        assert!(empirical_autonomy_ratio(&net, 1.0, 1.5).is_err());
    }
}
