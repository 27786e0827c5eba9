//! Python bindings. Flows and tolls cross the boundary as lists of
//! `(human, autonomous)` tuples; road indices are 0-based.

use mixtoll_core as core_lib;

use core_lib::bounds;
use core_lib::equilibrium::{self, EquilibriumResult};
use core_lib::social_optimum::{self, OptimumResult};
use core_lib::tolling::{self, TollSynthesisConfig};
use core_lib::{Demand, FlowProfile, RoadToll, TollScheme};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

create_exception!(mixtoll, NoIsolatedEquilibrium, PyRuntimeError);

fn to_py(e: core_lib::Error) -> PyErr {
    match e {
        core_lib::Error::NoIsolatedEquilibrium { .. } => NoIsolatedEquilibrium::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

type Pairs = Vec<(f64, f64)>;

fn pairs(flow: &FlowProfile) -> Pairs {
    flow.flows().iter().map(|f| (f.human, f.autonomous)).collect()
}

fn scheme(network: &core_lib::Network, tolls: Option<Pairs>) -> TollScheme {
    match tolls {
        Some(t) => TollScheme::new(t.into_iter().map(|(h, a)| RoadToll::new(h, a)).collect()),
        None => TollScheme::zero(network.len()),
    }
}

#[pyclass(frozen, get_all, from_py_object)]
#[derive(Clone)]
struct Road {
    a: f64,
    k: f64,
    t: f64,
}

#[pymethods]
impl Road {
    #[new]
    fn new(a: f64, k: f64, t: f64) -> PyResult<Self> {
        core_lib::Road::new(a, k, t).map_err(to_py)?;
        Ok(Road { a, k, t })
    }

    /// Latency at the given class flows.
    fn latency(&self, human: f64, autonomous: f64) -> PyResult<f64> {
        core_lib::latency(&self.inner(), human, autonomous).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Road(a={}, k={}, t={})", self.a, self.k, self.t)
    }
}

impl Road {
    fn inner(&self) -> core_lib::Road {
        core_lib::Road {
            a: self.a,
            k: self.k,
            t: self.t,
        }
    }
}

/// A parallel-road network with a fixed demand of each class.
#[pyclass(frozen)]
struct Network {
    network: core_lib::Network,
    demand: Demand,
}

#[pymethods]
impl Network {
    #[new]
    fn new(roads: Vec<Road>, human: f64, autonomous: f64) -> PyResult<Self> {
        let network = core_lib::Network::new(roads.iter().map(Road::inner).collect()).map_err(to_py)?;
        let demand = Demand::new(human, autonomous).map_err(to_py)?;
        Ok(Network { network, demand })
    }

    #[getter]
    fn roads(&self) -> Vec<Road> {
        self.network
            .roads()
            .iter()
            .map(|r| Road { a: r.a, k: r.k, t: r.t })
            .collect()
    }

    #[getter]
    fn demand(&self) -> (f64, f64) {
        (self.demand.human, self.demand.autonomous)
    }

    fn __len__(&self) -> usize {
        self.network.len()
    }

    fn social_cost(&self, flows: Pairs) -> PyResult<f64> {
        let flow = FlowProfile::from_pairs(&flows).map_err(to_py)?;
        core_lib::social_cost(&self.network, &flow).map_err(to_py)
    }

    /// Isolated equilibria sorted by social cost.
    #[pyo3(signature = (tolls=None))]
    fn equilibria(&self, tolls: Option<Pairs>) -> PyResult<Vec<Equilibrium>> {
        let set = equilibrium::enumerate_equilibria(
            &self.network,
            &self.demand,
            &scheme(&self.network, tolls),
        )
        .map_err(to_py)?;
        Ok(set.equilibria.iter().map(Equilibrium::from).collect())
    }

    /// Support patterns with a continuum of solutions, as
    /// `(human_roads, autonomous_roads)`.
    #[pyo3(signature = (tolls=None))]
    fn degenerate_patterns(&self, tolls: Option<Pairs>) -> PyResult<Vec<(Vec<usize>, Vec<usize>)>> {
        let set = equilibrium::enumerate_equilibria(
            &self.network,
            &self.demand,
            &scheme(&self.network, tolls),
        )
        .map_err(to_py)?;
        Ok(set
            .degenerate
            .into_iter()
            .map(|p| (p.human, p.autonomous))
            .collect())
    }

    #[pyo3(signature = (tolls=None))]
    fn worst_equilibrium(&self, tolls: Option<Pairs>) -> PyResult<Equilibrium> {
        equilibrium::worst_equilibrium(&self.network, &self.demand, &scheme(&self.network, tolls))
            .map(|e| Equilibrium::from(&e))
            .map_err(to_py)
    }

    #[pyo3(signature = (tolls=None))]
    fn best_equilibrium(&self, tolls: Option<Pairs>) -> PyResult<Equilibrium> {
        equilibrium::best_equilibrium(&self.network, &self.demand, &scheme(&self.network, tolls))
            .map(|e| Equilibrium::from(&e))
            .map_err(to_py)
    }

    /// Whether `flows` satisfy the Wardrop conditions within `tol`.
    #[pyo3(signature = (flows, tolls=None, tol=1e-7))]
    fn is_equilibrium(&self, flows: Pairs, tolls: Option<Pairs>, tol: f64) -> PyResult<bool> {
        let flow = FlowProfile::from_pairs(&flows).map_err(to_py)?;
        equilibrium::verify_equilibrium(
            &self.network,
            &self.demand,
            &scheme(&self.network, tolls),
            &flow,
            tol,
        )
        .map(|v| v.holds)
        .map_err(to_py)
    }

    fn optimal_routing(&self) -> PyResult<Optimum> {
        social_optimum::optimal_routing(&self.network, &self.demand)
            .map(|o| Optimum::from(&o))
            .map_err(to_py)
    }

    /// Differentiated tolls that make the optimum the equilibrium.
    #[pyo3(signature = (mu=None, prohibitive=None))]
    fn differentiated_tolls(&self, mu: Option<f64>, prohibitive: Option<f64>) -> PyResult<Pairs> {
        let opt = social_optimum::optimal_routing(&self.network, &self.demand).map_err(to_py)?;
        let synth = tolling::synthesize_differentiated_tolls(
            &self.network,
            &opt,
            &TollSynthesisConfig { mu, prohibitive },
        )
        .map_err(to_py)?;
        Ok(synth
            .scheme
            .tolls()
            .iter()
            .map(|t| (t.human, t.autonomous))
            .collect())
    }

    fn asymmetry(&self) -> f64 {
        bounds::network_asymmetry(&self.network)
    }

    fn __repr__(&self) -> String {
        format!(
            "Network({} roads, demand=({}, {}))",
            self.network.len(),
            self.demand.human,
            self.demand.autonomous
        )
    }
}

#[pyclass(frozen, get_all)]
struct Equilibrium {
    flows: Pairs,
    cost: f64,
    lambda_human: Option<f64>,
    lambda_autonomous: Option<f64>,
}

impl From<&EquilibriumResult> for Equilibrium {
    fn from(e: &EquilibriumResult) -> Self {
        Equilibrium {
            flows: pairs(&e.flow),
            cost: e.cost,
            lambda_human: e.lambda_h,
            lambda_autonomous: e.lambda_a,
        }
    }
}

#[pymethods]
impl Equilibrium {
    fn __repr__(&self) -> String {
        format!("Equilibrium(cost={}, flows={:?})", self.cost, self.flows)
    }
}

#[pyclass(frozen, get_all)]
struct Optimum {
    flows: Pairs,
    cost: f64,
    mixed_roads: Vec<usize>,
    separation_guaranteed: bool,
}

impl From<&OptimumResult> for Optimum {
    fn from(o: &OptimumResult) -> Self {
        Optimum {
            flows: pairs(&o.flow),
            cost: o.cost,
            mixed_roads: o.mixed_roads.clone(),
            separation_guaranteed: o.separation_guaranteed,
        }
    }
}

#[pymethods]
impl Optimum {
    fn __repr__(&self) -> String {
        format!("Optimum(cost={}, flows={:?})", self.cost, self.flows)
    }
}

#[pyfunction]
fn xi(sigma: u32) -> PyResult<f64> {
    bounds::xi(sigma).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (k, sigma=1))]
fn price_of_autonomy_bound(k: f64, sigma: u32) -> PyResult<f64> {
    bounds::price_of_autonomy_bound(k, sigma).map_err(to_py)
}

/// `(toll, cost)` of the best undifferentiated toll on the two-road family.
#[pyfunction]
fn best_undifferentiated_toll_two_road(k: f64) -> PyResult<(f64, f64)> {
    tolling::best_undifferentiated_toll_two_road(k)
        .map(|r| (r.toll, r.cost))
        .map_err(to_py)
}

#[pymodule]
fn mixtoll(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Road>()?;
    m.add_class::<Network>()?;
    m.add_class::<Equilibrium>()?;
    m.add_class::<Optimum>()?;
    m.add("NoIsolatedEquilibrium", m.py().get_type::<NoIsolatedEquilibrium>())?;
    m.add_function(wrap_pyfunction!(xi, m)?)?;
    m.add_function(wrap_pyfunction!(price_of_autonomy_bound, m)?)?;
    m.add_function(wrap_pyfunction!(best_undifferentiated_toll_two_road, m)?)?;
    Ok(())
}
