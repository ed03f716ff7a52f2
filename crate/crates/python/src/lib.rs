//! Python bindings: the experiment commands take and return JSON text, plus a few direct
//! entry points for interactive use.

use std::collections::HashMap;

use adicflow::experiment::{self, ExperimentConfig};
use adicflow::flow::{self, FlowState};
use adicflow::graph::{IncidenceMatrix, OrientedGraph};
use adicflow::observables::{self, CellIntegrals, CylinderObservable};
use adicflow::ordering::VershikOrdering;
use adicflow::random::{self, GraphSequence, LyapunovConfig, RenormCocycle};
use adicflow::tower::PeriodicTower;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use twofloat::TwoFloat;

fn err(e: adicflow::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn parse(config: &str) -> PyResult<ExperimentConfig> {
    ExperimentConfig::from_json(config).map_err(|e| PyValueError::new_err(format!("config: {e}")))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("report serializes")
}

fn graph(matrix: Vec<Vec<i64>>) -> PyResult<OrientedGraph> {
    OrientedGraph::from_matrix(&IncidenceMatrix::from_rows(&matrix).map_err(err)?).map_err(err)
}

/// Spectral report of the configured graph or sequence, as JSON.
#[pyfunction]
fn spectral(config: &str) -> PyResult<String> {
    experiment::cmd_spectral(&parse(config)?).map(|s| to_json(&s)).map_err(err)
}

/// Deviation run: `{file name: contents}`.
#[pyfunction]
fn deviation(config: &str) -> PyResult<HashMap<String, String>> {
    Ok(experiment::cmd_deviation(&parse(config)?).map_err(err)?.0.into_iter().collect())
}

/// Limit run: `{file name: contents}`.
#[pyfunction]
fn limit(config: &str) -> PyResult<HashMap<String, String>> {
    Ok(experiment::cmd_limit(&parse(config)?).map_err(err)?.0.into_iter().collect())
}

/// `[(suite, passed)]`; an empty list runs every suite.
#[pyfunction]
#[pyo3(signature = (suites = Vec::new(), tol = None))]
fn selftest(suites: Vec<String>, tol: Option<f64>) -> PyResult<Vec<(String, bool)>> {
    let r = experiment::cmd_selftest(&suites, tol).map_err(err)?;
    Ok(r.iter().map(|s| (s.suite.clone(), s.passed())).collect())
}

/// `(θ₁, h, λ)` of a primitive incidence matrix.
#[pyfunction]
fn perron(matrix: Vec<Vec<i64>>) -> PyResult<(f64, Vec<f64>, Vec<f64>)> {
    let t = PeriodicTower::of_graph(&graph(matrix)?).map_err(err)?;
    Ok((t.sd.theta1, t.sd.h.clone(), t.sd.la.clone()))
}

/// Lyapunov exponents of i.i.d. products of the given matrices.
#[pyfunction]
#[pyo3(signature = (matrices, probs, seed = 0, horizon = 10_000))]
fn lyapunov(matrices: Vec<Vec<Vec<i64>>>, probs: Vec<f64>, seed: u64, horizon: usize) -> PyResult<Vec<f64>> {
    let graphs = matrices.into_iter().map(graph).collect::<PyResult<Vec<_>>>()?;
    let orderings = graphs.iter().map(VershikOrdering::canonical).collect();
    let seq = GraphSequence::new(graphs, orderings, probs, seed).map_err(err)?;
    let cfg = LyapunovConfig { horizon, ..LyapunovConfig::default() };
    Ok(random::lyapunov_spectrum(&RenormCocycle::new(&seq), 0, &cfg).map_err(err)?.values)
}

/// The flow on the periodic compactum of one graph, with the canonical ordering.
#[pyclass]
struct Flow {
    tower: PeriodicTower,
}

#[pymethods]
impl Flow {
    #[new]
    fn new(matrix: Vec<Vec<i64>>) -> PyResult<Self> {
        Ok(Flow { tower: PeriodicTower::of_graph(&graph(matrix)?).map_err(err)? })
    }

    #[getter]
    fn theta1(&self) -> f64 {
        self.tower.sd.theta1
    }

    /// `∫_0^T f(h_t x) dt` for `f = constant + Σ coeff [x_1.. = word]`, starting at the point
    /// with coordinates `edges` (from `x_1` up) and `offset` inside its level-1 cell. Coordinates
    /// above the given ones are drawn from `seed` when the orbit needs them.
    #[pyo3(signature = (terms, edges, offset, time, constant = 0.0, seed = 0))]
    fn integral(
        &self,
        terms: Vec<(Vec<usize>, f64)>,
        edges: Vec<usize>,
        offset: f64,
        time: f64,
        constant: f64,
        seed: u64,
    ) -> PyResult<(f64, f64)> {
        let t = &self.tower;
        let depth = terms.first().map_or(0, |(w, _)| w.len());
        let terms = terms.into_iter().map(|(w, a)| (w, Complex64::new(a, 0.0))).collect();
        let f = CylinderObservable::new(&t.graph, depth, terms, Complex64::new(constant, 0.0)).map_err(err)?;
        let ext = Some(flow::Extension { seed, shift: 0 });
        let x = FlowState::new(t, edges, TwoFloat::from(offset), ext).map_err(err)?;
        let ci = CellIntegrals::new(t, &f).map_err(err)?;
        let z = observables::ergodic_integral(t, &ci, &x, time).map_err(err)?;
        Ok((z.re, z.im))
    }
}

#[pymodule]
fn adicflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(spectral, m)?)?;
    m.add_function(wrap_pyfunction!(deviation, m)?)?;
    m.add_function(wrap_pyfunction!(limit, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    m.add_function(wrap_pyfunction!(perron, m)?)?;
    m.add_function(wrap_pyfunction!(lyapunov, m)?)?;
    m.add_class::<Flow>()?;
    Ok(())
}
