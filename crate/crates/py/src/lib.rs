//! Python bindings for the solver CLI pipeline: run a march from a config
//! file, generate reference solutions, compare artifact tables, and poke at
//! saved policy checkpoints without leaving Python.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rulesolve_cli::config::{load_config, resolve, Overrides, ResolvedRun};
use rulesolve_cli::{compare, metrics, oracle, solve, table};
use rulesolve_core::oracles::cole::{cole_series_grid, BesselMode};
use rulesolve_core::policy::MlpPolicy;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(format!("{e:#}"))
}

fn resolve_run(config: &str, out: Option<&str>, seed: Option<u64>) -> PyResult<ResolvedRun> {
    let path = Path::new(config);
    let parsed = load_config(path).map_err(err)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let overrides = Overrides {
        out: out.map(PathBuf::from),
        seed,
        ..Overrides::default()
    };
    resolve(parsed, &overrides, base).map_err(err)
}

/// Runs the time march described by a TOML config and writes its artifacts.
#[pyfunction]
#[pyo3(signature = (config, out=None, seed=None))]
fn solve_config<'py>(
    py: Python<'py>,
    config: &str,
    out: Option<&str>,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let run = resolve_run(config, out, seed)?;
    let report = solve::run_solve(&run).map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("out_dir", report.out_dir.to_string_lossy())?;
    d.set_item("n_steps", report.n_steps)?;
    d.set_item("total_iterations", report.total_iterations)?;
    d.set_item("all_converged", report.all_converged)?;
    d.set_item("flagged_steps", report.flagged)?;
    d.set_item("config_hash", &run.hash)?;
    Ok(d)
}

/// Writes the reference solution for a config; returns the CSV path.
#[pyfunction]
#[pyo3(signature = (config, out=None))]
fn oracle_config(config: &str, out: Option<&str>) -> PyResult<String> {
    let run = resolve_run(config, out, None)?;
    let out_dir = out.map(PathBuf::from).unwrap_or_else(|| run.out_dir.clone());
    let path = oracle::run_oracle(&run, &out_dir).map_err(err)?;
    Ok(path.to_string_lossy().into_owned())
}

/// Compares two artifact tables; returns rows of {section, component, metric, value}.
#[pyfunction]
#[pyo3(signature = (candidate, reference, force=false))]
fn compare_files<'py>(
    py: Python<'py>,
    candidate: &str,
    reference: &str,
    force: bool,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let a = table::Table::load(Path::new(candidate)).map_err(err)?;
    let b = table::Table::load(Path::new(reference)).map_err(err)?;
    let report = compare::compare_tables(&a, &b, force).map_err(err)?;
    let mut rows = Vec::with_capacity(report.rows.len());
    for row in &report.rows {
        let d = PyDict::new_bound(py);
        d.set_item("section", &row.section)?;
        d.set_item("component", &row.component)?;
        d.set_item("metric", &row.metric)?;
        d.set_item("value", row.value)?;
        rows.push(d);
    }
    Ok(rows)
}

/// Summarizes warm-start behavior of a finished run directory.
#[pyfunction]
#[pyo3(signature = (run_dir, out=None))]
fn metrics_run<'py>(
    py: Python<'py>,
    run_dir: &str,
    out: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let dir = PathBuf::from(run_dir);
    let out_dir = out.map(PathBuf::from).unwrap_or_else(|| dir.clone());
    let report = metrics::run_metrics(&dir, &out_dir).map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("out_dir", report.out_dir.to_string_lossy())?;
    d.set_item("first_step_iterations", report.first_step_iterations)?;
    d.set_item("median_late_iterations", report.median_late_iterations)?;
    d.set_item("warm_start_ratio", report.ratio)?;
    Ok(d)
}

/// Analytic series solution of the viscous conservation-form benchmark,
/// evaluated on a grid of x at one time.
#[pyfunction]
#[pyo3(signature = (xs, t, nu, terms=50))]
fn cole_series(xs: Vec<f64>, t: f64, nu: f64, terms: usize) -> PyResult<Vec<f64>> {
    cole_series_grid(&xs, t, nu, terms, BesselMode::Scaled).map_err(err)
}

/// A saved policy network, reopened from a checkpoint file.
#[pyclass]
struct Policy {
    inner: MlpPolicy,
}

#[pymethods]
impl Policy {
    /// Loads a checkpoint written by a solve run.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(err)?;
        let inner = MlpPolicy::load_checkpoint(BufReader::new(file)).map_err(err)?;
        Ok(Policy { inner })
    }

    /// Mean network outputs at one input point.
    fn forward(&self, input: Vec<f64>) -> PyResult<Vec<f64>> {
        let (mean, _sigma) = self.inner.forward(&input).map_err(err)?;
        Ok(mean)
    }

    /// Per-output Gaussian standard deviations.
    fn sigmas(&self) -> Vec<f64> {
        self.inner.sigmas()
    }

    /// Number of trainable parameters.
    #[getter]
    fn n_params(&self) -> usize {
        self.inner.params().len()
    }
}

#[pymodule]
fn rulesolve_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(solve_config, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_config, m)?)?;
    m.add_function(wrap_pyfunction!(compare_files, m)?)?;
    m.add_function(wrap_pyfunction!(metrics_run, m)?)?;
    m.add_function(wrap_pyfunction!(cole_series, m)?)?;
    m.add_class::<Policy>()?;
    Ok(())
}
