//! Python bindings. Vectors cross as lists of floats; results come back as
//! plain dicts and lists.

use ::dpdesign as core;
use core::polytope::ObliviousPolytope;
use core::{
    Belief, BeliefDistribution, DatabasePrior, DecisionProblem, EpsilonBudget, SignalMatrix, StateBelief, StatePrior,
    SupportWeights,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: core::Error) -> PyErr {
    match e {
        core::Error::Lp(_) | core::Error::Internal(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn budget(epsilon: f64) -> PyResult<EpsilonBudget> {
    EpsilonBudget::new(epsilon).map_err(err)
}

fn problem(payoffs: Vec<Vec<f64>>, actions: Option<Vec<f64>>) -> PyResult<DecisionProblem> {
    match actions {
        Some(a) => DecisionProblem::new(a, payoffs),
        None => DecisionProblem::with_indexed_actions(payoffs),
    }
    .map_err(err)
}

fn beliefs(rows: Vec<Vec<f64>>) -> PyResult<Vec<StateBelief>> {
    rows.into_iter().map(|r| StateBelief::normalized(r).map_err(err)).collect()
}

fn rows_of<B: Belief>(dist: &BeliefDistribution<B>) -> Vec<Vec<f64>> {
    dist.support().iter().map(|b| b.probs().to_vec()).collect()
}

/// Signal matrix of a count mechanism: one row per count, rows sum to one.
#[pyclass(name = "Mechanism", module = "dpdesign")]
struct PyMechanism {
    inner: core::ObliviousMechanism,
}

#[pymethods]
impl PyMechanism {
    #[new]
    #[pyo3(signature = (rows, label = "mechanism"))]
    fn new(rows: Vec<Vec<f64>>, label: &str) -> PyResult<Self> {
        let signal = SignalMatrix::from_rows(rows).map_err(err)?;
        Ok(Self { inner: core::ObliviousMechanism::new(label, signal).map_err(err)? })
    }

    #[staticmethod]
    fn geometric(epsilon: f64, n: usize) -> PyResult<Self> {
        Ok(Self { inner: core::ObliviousMechanism::geometric(budget(epsilon)?, n).map_err(err)? })
    }

    #[staticmethod]
    fn identity(n: usize) -> PyResult<Self> {
        Ok(Self { inner: core::ObliviousMechanism::identity(n).map_err(err)? })
    }

    #[staticmethod]
    fn uninformative(n: usize) -> PyResult<Self> {
        Ok(Self { inner: core::ObliviousMechanism::uninformative(n).map_err(err)? })
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.signal().rows().to_vec()
    }

    fn garble(&self, map: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self { inner: self.inner.garble(&map).map_err(err)? })
    }

    /// `(private, worst |log ratio|)`.
    fn verify(&self, epsilon: f64) -> PyResult<(bool, f64)> {
        let v = core::verify_dp(&self.inner, budget(epsilon)?);
        Ok((v.private, v.worst_log_ratio))
    }

    #[pyo3(signature = (prior, payoffs, actions = None))]
    fn value(&self, prior: Vec<f64>, payoffs: Vec<Vec<f64>>, actions: Option<Vec<f64>>) -> PyResult<f64> {
        let mu0 = StatePrior::new(prior).map_err(err)?;
        core::mechanism_value(&self.inner, &mu0, &problem(payoffs, actions)?).map_err(err)
    }

    /// `(weights, posteriors)` induced at `prior`.
    fn posteriors(&self, prior: Vec<f64>) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let mu0 = StatePrior::new(prior).map_err(err)?;
        let dist = core::induced_distribution(&self.inner, &mu0).map_err(err)?;
        Ok((dist.weights().to_vec(), rows_of(&dist)))
    }

    fn __repr__(&self) -> String {
        format!("Mechanism(label={:?}, n={})", self.inner.label(), self.inner.n())
    }
}

/// Optimal count mechanism as a dict with `optimum`, `weights`,
/// `posteriors`, `signatures` and `mechanism`.
#[pyfunction]
#[pyo3(signature = (prior, payoffs, epsilon, actions = None))]
fn solve_oblivious<'py>(
    py: Python<'py>,
    prior: Vec<f64>,
    payoffs: Vec<Vec<f64>>,
    epsilon: f64,
    actions: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let mu0 = StatePrior::new(prior).map_err(err)?;
    let sol = core::solve_oblivious(&mu0, &problem(payoffs, actions)?, budget(epsilon)?).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("optimum", sol.optimum)?;
    out.set_item("weights", sol.distribution.weights().to_vec())?;
    out.set_item("posteriors", rows_of(&sol.distribution))?;
    out.set_item("signatures", sol.signatures.iter().map(|s| s.states()).collect::<Vec<_>>())?;
    let mech = core::ObliviousMechanism::new("optimal", sol.signal).map_err(err)?;
    out.set_item("mechanism", Py::new(py, PyMechanism { inner: mech })?)?;
    Ok(out)
}

/// Optimal database mechanism; `prior` is indexed by databases, most
/// significant bit first.
#[pyfunction]
#[pyo3(signature = (n, prior, payoffs, epsilon, actions = None))]
fn solve_database<'py>(
    py: Python<'py>,
    n: usize,
    prior: Vec<f64>,
    payoffs: Vec<Vec<f64>>,
    epsilon: f64,
    actions: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let pi0 = DatabasePrior::new(n, prior).map_err(err)?;
    let sol = core::solve_database(&pi0, &problem(payoffs, actions)?, budget(epsilon)?).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("optimum", sol.optimum)?;
    out.set_item("weights", sol.distribution.weights().to_vec())?;
    out.set_item("posteriors", rows_of(&sol.distribution))?;
    out.set_item("signal", sol.signal.rows().to_vec())?;
    Ok(out)
}

/// `(signature states, vertex)` pairs of the private-posterior polytope.
#[pyfunction]
#[pyo3(signature = (prior, epsilon, cap = 20))]
fn oblivious_vertices(prior: Vec<f64>, epsilon: f64, cap: usize) -> PyResult<Vec<(Vec<usize>, Vec<f64>)>> {
    let poly = ObliviousPolytope::new(budget(epsilon)?, StatePrior::new(prior).map_err(err)?);
    let vertices = poly.vertices(cap).map_err(err)?;
    Ok(vertices.into_iter().map(|(s, v)| (s.states(), v.probs().to_vec())).collect())
}

/// Weights placing the prior at the barycenter of `support`, or `None`.
#[pyfunction]
fn weights_for_support(support: Vec<Vec<f64>>, prior: Vec<f64>) -> PyResult<Option<Vec<f64>>> {
    match core::weights_for_support(&beliefs(support)?, &prior).map_err(err)? {
        SupportWeights::Plausible(w) => Ok(Some(w)),
        SupportWeights::NotPlausible { .. } => Ok(None),
    }
}

/// Peak assignment showing the first distribution (weights, posteriors)
/// dominates the second in the UPRR order, or `None`.
#[pyfunction]
fn uprr_compare(
    weights: Vec<f64>,
    posteriors: Vec<Vec<f64>>,
    other_weights: Vec<f64>,
    other_posteriors: Vec<Vec<f64>>,
) -> PyResult<Option<Vec<usize>>> {
    let tau = BeliefDistribution::new(beliefs(posteriors)?, weights).map_err(err)?;
    let other = BeliefDistribution::new(beliefs(other_posteriors)?, other_weights).map_err(err)?;
    Ok(core::uprr_compare(&tau, &other).map_err(err)?.map(|a| a.peaks))
}

#[pymodule]
fn dpdesign(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMechanism>()?;
    m.add_function(wrap_pyfunction!(solve_oblivious, m)?)?;
    m.add_function(wrap_pyfunction!(solve_database, m)?)?;
    m.add_function(wrap_pyfunction!(oblivious_vertices, m)?)?;
    m.add_function(wrap_pyfunction!(weights_for_support, m)?)?;
    m.add_function(wrap_pyfunction!(uprr_compare, m)?)?;
    Ok(())
}
