//! Python bindings: instance loading, feasibility checks, fragment dumps
//! and the full solve pipeline. Run records come back as JSON strings so
//! the Python side can `json.loads` them.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use darp_lpt::formulations::Formulation;
use darp_lpt::fragment::SetKind;
use darp_lpt::instance::{
    parse_instance, random_instance, Instance as CoreInstance, RandomInstanceParams,
};
use darp_lpt::run::{self, Problem, RunConfig};
use darp_lpt::scheduling::{check_schedule, route_cost, RoutePath};

#[pyclass(name = "Instance")]
#[derive(Clone)]
struct PyInstance {
    inner: CoreInstance,
}

#[pymethods]
impl PyInstance {
    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn num_vehicles(&self) -> usize {
        self.inner.num_vehicles
    }

    #[getter]
    fn capacity(&self) -> i64 {
        self.inner.capacity
    }

    #[getter]
    fn pickup_limit(&self) -> usize {
        self.inner.pickup_limit
    }

    fn travel_cost(&self, i: usize, j: usize) -> f64 {
        self.inner.travel_cost(i, j)
    }

    /// Is the depot-to-depot route with these stops feasible?
    fn route_feasible(&self, stops: Vec<usize>) -> bool {
        check_schedule(&RoutePath::new(stops), &self.inner, true).is_ok()
    }

    fn route_cost(&self, stops: Vec<usize>) -> f64 {
        route_cost(&RoutePath::new(stops), &self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(n={}, vehicles={}, Q={}, L={})",
            self.inner.n, self.inner.num_vehicles, self.inner.capacity, self.inner.pickup_limit
        )
    }
}

#[pyfunction(name = "parse_instance")]
fn py_parse_instance(text: &str) -> PyResult<PyInstance> {
    parse_instance(text)
        .map(|inner| PyInstance { inner })
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction(name = "random_instance", signature = (seed, n = 4))]
fn py_random_instance(seed: u64, n: usize) -> PyInstance {
    PyInstance { inner: random_instance(seed, &RandomInstanceParams { n, ..Default::default() }) }
}

fn build_config(
    problem: &str,
    formulation: &str,
    fragments: &str,
    l: Option<usize>,
    time_limit: f64,
    replicate_cuts: bool,
) -> PyResult<RunConfig> {
    Ok(RunConfig {
        problem: Problem::parse(problem)
            .ok_or_else(|| PyValueError::new_err(format!("unknown problem '{problem}'")))?,
        formulation: Formulation::parse(formulation)
            .ok_or_else(|| PyValueError::new_err(format!("unknown formulation '{formulation}'")))?,
        fragment_kind: SetKind::parse(fragments)
            .ok_or_else(|| PyValueError::new_err(format!("unknown fragment set '{fragments}'")))?,
        pickup_limit: l,
        time_limit,
        replicate_cuts,
        ..Default::default()
    })
}

/// Solve an instance; returns the run record as a JSON string.
#[pyfunction(signature = (
    instance,
    problem = "darp-lpt",
    formulation = "psff",
    fragments = "rf",
    l = None,
    time_limit = 1800.0,
    replicate_cuts = true,
    name = "instance",
))]
#[allow(clippy::too_many_arguments)]
fn solve(
    instance: &PyInstance,
    problem: &str,
    formulation: &str,
    fragments: &str,
    l: Option<usize>,
    time_limit: f64,
    replicate_cuts: bool,
    name: &str,
) -> PyResult<String> {
    let cfg = build_config(problem, formulation, fragments, l, time_limit, replicate_cuts)?;
    let rec = run::run(name, &instance.inner, &cfg)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    serde_json::to_string(&rec).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Rendered fragment dump (same format as the CLI).
#[pyfunction(signature = (instance, problem = "darp-lpt", fragments = "rf", l = None))]
fn fragment_dump(
    instance: &PyInstance,
    problem: &str,
    fragments: &str,
    l: Option<usize>,
) -> PyResult<String> {
    let cfg = build_config(problem, "psff", fragments, l, 1800.0, true)?;
    run::fragment_dump(&instance.inner, &cfg).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn darp_lpt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(py_parse_instance, m)?)?;
    m.add_function(wrap_pyfunction!(py_random_instance, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(fragment_dump, m)?)?;
    Ok(())
}
