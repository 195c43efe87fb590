//! Python bindings: a thin layer over the lccp crate exposing instances,
//! the exact solver, the brute-force oracle, and solution validation.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lccp::bnb::{solve, SolveStatus, SolverConfig};
use lccp::colgen::MasterMode;
use lccp::instance::{
    generate_euclidean, load_instance, metric_closure, validate_partition, CyclePartition,
    Instance, InstanceFormat,
};
use lccp::oracle;

fn to_value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A complete weighted graph with per-node critical times.
#[pyclass(name = "Instance", skip_from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: Instance,
}

#[pymethods]
impl PyInstance {
    #[new]
    #[pyo3(signature = (travel, crit, metric = false))]
    fn new(travel: Vec<Vec<f64>>, crit: Vec<f64>, metric: bool) -> PyResult<Self> {
        Ok(PyInstance {
            inner: Instance::new(travel, crit, metric).map_err(to_value_err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, seed = 0, coord_range = 100.0, crit_low = 50.0, crit_high = 200.0))]
    fn generate(
        n: usize,
        seed: u64,
        coord_range: f64,
        crit_low: f64,
        crit_high: f64,
    ) -> PyResult<Self> {
        Ok(PyInstance {
            inner: generate_euclidean(n, seed, coord_range, crit_low, crit_high)
                .map_err(to_value_err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (text, format = "text"))]
    fn parse(text: &str, format: &str) -> PyResult<Self> {
        let fmt = match format {
            "text" => InstanceFormat::Text,
            "json" => InstanceFormat::Json,
            other => return Err(PyValueError::new_err(format!("unknown format {other:?}"))),
        };
        Ok(PyInstance {
            inner: load_instance(text.as_bytes(), fmt).map_err(to_value_err)?,
        })
    }

    fn metric_closure(&self) -> PyInstance {
        PyInstance {
            inner: metric_closure(&self.inner),
        }
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn crit(&self) -> Vec<f64> {
        self.inner.crit.clone()
    }

    #[getter]
    fn travel(&self) -> Vec<Vec<f64>> {
        self.inner.travel.clone()
    }

    #[getter]
    fn is_metric(&self) -> bool {
        self.inner.is_metric
    }

    fn __repr__(&self) -> String {
        format!("Instance(n={}, metric={})", self.inner.n, self.inner.is_metric)
    }
}

fn partition_to_dict<'py>(py: Python<'py>, part: &CyclePartition) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("objective", part.objective)?;
    d.set_item(
        "cycles",
        part.cycles.iter().map(|c| c.nodes.clone()).collect::<Vec<_>>(),
    )?;
    Ok(d)
}

/// Solve an instance to proven optimality. Returns a dict with the
/// objective, the cycles, solver status, and search statistics.
#[pyfunction(name = "solve")]
#[pyo3(signature = (inst, mode = "partition", bidirectional = true, symmetry_sort = true,
                    early_branching = true, heuristic_pricing = true, workers = 1,
                    time_limit = None, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn py_solve<'py>(
    py: Python<'py>,
    inst: &PyInstance,
    mode: &str,
    bidirectional: bool,
    symmetry_sort: bool,
    early_branching: bool,
    heuristic_pricing: bool,
    workers: usize,
    time_limit: Option<f64>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = SolverConfig {
        mode: match mode {
            "partition" => MasterMode::Partition,
            "cover" => MasterMode::Cover,
            other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
        },
        bidirectional,
        symmetry_sort,
        early_branching,
        heuristic_pricing,
        workers: workers.max(1),
        time_limit_s: time_limit.unwrap_or(f64::INFINITY),
        max_columns_per_round: 50,
        seed,
    };
    let (part, stats, status) =
        solve(&inst.inner, &cfg).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let d = partition_to_dict(py, &part)?;
    d.set_item(
        "status",
        match status {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Timeout => "timeout",
        },
    )?;
    d.set_item("lower_bound", stats.lower_bound)?;
    d.set_item("nodes_processed", stats.nodes_processed)?;
    d.set_item("lp_solves", stats.lp_solves)?;
    d.set_item("columns_added", stats.columns_added)?;
    d.set_item("labels_generated", stats.pricing.labels_generated)?;
    d.set_item("wall_time_s", stats.wall_time_s)?;
    Ok(d)
}

/// Exhaustive reference optimum for small instances (n <= 12).
#[pyfunction(name = "oracle_optimal")]
fn py_oracle(inst: &PyInstance) -> PyResult<usize> {
    oracle::optimal_partition(&inst.inner).map_err(to_value_err)
}

/// Check a partition (list of cycles, each a list of node indices) against
/// an instance. Returns (ok, message).
#[pyfunction(name = "validate")]
fn py_validate(inst: &PyInstance, cycles: Vec<Vec<usize>>) -> PyResult<(bool, String)> {
    if cycles.iter().any(|c| c.is_empty()) {
        return Ok((false, "empty cycle".into()));
    }
    if cycles
        .iter()
        .flatten()
        .any(|&v| v >= inst.inner.n)
    {
        return Ok((false, "node index out of range".into()));
    }
    let cs: Vec<lccp::labeling::Cycle> = cycles
        .iter()
        .map(|nodes| lccp::labeling::Cycle::from_path(nodes, &inst.inner, 0.0))
        .collect();
    let part = CyclePartition::new(cs);
    let verdict = validate_partition(&inst.inner, &part);
    Ok((verdict.is_accept(), verdict.to_string()))
}

#[pymodule]
fn lccp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(py_solve, m)?)?;
    m.add_function(wrap_pyfunction!(py_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(py_validate, m)?)?;
    Ok(())
}
