//! Seeded random instances for property suites.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Demand, Network, Road};

/// Parameters of the random instance distribution. Serialized as the
/// bundled `random_suite.json` seed file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSuite {
    pub seed: u64,
    pub instances: usize,
    pub min_roads: usize,
    pub max_roads: usize,
    /// `a`, `k` and `t` are drawn uniformly from this range.
    pub param_range: (f64, f64),
    /// Demands are drawn uniformly from `(0, max_demand]`.
    pub max_demand: f64,
    /// Roads whose `k` lies this close to one count as symmetric; at most
    /// one such road is allowed per instance.
    pub symmetric_margin: f64,
}

impl Default for RandomSuite {
    fn default() -> Self {
        RandomSuite {
            seed: 0x5eed_0001,
            instances: 200,
            min_roads: 2,
            max_roads: 6,
            param_range: (0.1, 5.0),
            max_demand: 5.0,
            symmetric_margin: 1e-6,
        }
    }
}

impl RandomSuite {
    /// Draws a network and demand. With `asymmetric_at_least_one`, every
    /// `k_i` is drawn from `[1, hi]` instead.
    pub fn instance<R: Rng>(&self, rng: &mut R, asymmetric_at_least_one: bool) -> (Network, Demand) {
        let (lo, hi) = self.param_range;
        let n = rng.gen_range(self.min_roads..=self.max_roads);
        let mut roads = Vec::with_capacity(n);
        let mut symmetric = 0;
        while roads.len() < n {
            let a = rng.gen_range(lo..=hi);
            let k = if asymmetric_at_least_one {
                rng.gen_range(1.0..=hi)
            } else {
                rng.gen_range(lo..=hi)
            };
            let t = rng.gen_range(lo..=hi);
            let near_one = (k - 1.0).abs() <= self.symmetric_margin;
            if near_one && symmetric == 1 {
                continue;
            }
            symmetric += usize::from(near_one);
            roads.push(Road { a, k, t });
        }
        let network = Network::new(roads).expect("drawn parameters are valid");
        let demand = Demand {
            human: self.max_demand * (1.0 - rng.gen::<f64>()),
            autonomous: self.max_demand * (1.0 - rng.gen::<f64>()),
        };
        (network, demand)
    }
}
