//! Python module `inmed`.
//!
//! Configs are passed as JSON strings with the same schema as the CLI.
//! Fields come back as flat row-major lists of length `nx * ny`.
//! Failures raise `inmed.InmedError(code, message)`.

use std::path::PathBuf;

use inmed_core::cli::experiments::{self, Output};
use inmed_core::config::ExperimentConfig;
use inmed_core::forward::{forward as solve_forward, ForwardOptions};
use inmed_core::reconstruction::reconstruct as solve_reconstruct;
use inmed_core::{LabError, ScalarField};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(inmed, InmedError, PyException);

fn to_py(e: LabError) -> PyErr {
    InmedError::new_err((e.code(), e.to_string()))
}

fn load(config_json: &str) -> PyResult<ExperimentConfig> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(to_py)?;
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn grid_dict<'py>(py: Python<'py>, f: &ScalarField) -> PyResult<Bound<'py, PyDict>> {
    let g = f.grid();
    let d = PyDict::new(py);
    d.set_item("nx", g.nx())?;
    d.set_item("ny", g.ny())?;
    d.set_item("spacing", g.spacing())?;
    d.set_item("origin", g.origin())?;
    Ok(d)
}

/// SHA-256 of the canonical config, as stamped on every output file.
#[pyfunction]
fn config_hash(config_json: &str) -> PyResult<String> {
    Ok(load(config_json)?.hash())
}

/// Solves the forward problem for the configured reference potential.
///
/// Returns a dict with the grid shape and the fields `u`, `intensity`,
/// `amplitude`, `potential`, plus the class report.
#[pyfunction]
#[pyo3(signature = (config_json = "{}"))]
fn forward<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = load(config_json)?;
    let r = py
        .detach(|| -> inmed_core::Result<_> {
            let grid = cfg.grid()?;
            let spec = cfg.spec(&grid)?;
            let h = cfg.boundary_field(&grid)?;
            solve_forward(&spec.reference, &h, &spec, ForwardOptions::default())
        })
        .map_err(to_py)?;
    let d = grid_dict(py, &r.u)?;
    d.set_item("u", r.u.values().to_vec())?;
    d.set_item("intensity", r.intensity.values().to_vec())?;
    d.set_item("amplitude", r.amplitude.values().to_vec())?;
    d.set_item("potential", r.potential.values().to_vec())?;
    let report = serde_json::to_value(r.report).map_err(|e| to_py(e.into()))?;
    d.set_item("report", json_to_py(py, &report)?)?;
    Ok(d)
}

/// Recovers the potential from an intensity field on the configured grid.
#[pyfunction]
#[pyo3(signature = (intensity, config_json = "{}"))]
fn reconstruct<'py>(py: Python<'py>, intensity: Vec<f64>, config_json: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = load(config_json)?;
    let r = py
        .detach(|| -> inmed_core::Result<_> {
            let grid = cfg.grid()?;
            let i = ScalarField::from_values(grid.clone(), intensity)?;
            let h = cfg.boundary_field(&grid)?;
            solve_reconstruct(&i, &h, &cfg.reconstruction)
        })
        .map_err(to_py)?;
    let d = grid_dict(py, &r.v_rec)?;
    d.set_item("potential", r.v_rec.values().to_vec())?;
    d.set_item("amplitude", r.w.values().to_vec())?;
    d.set_item("iterations", r.trace.len())?;
    d.set_item("converged", r.converged)?;
    d.set_item("residuals", r.trace.iter().map(|t| t.residual).collect::<Vec<_>>())?;
    Ok(d)
}

/// Runs one CLI experiment (`forward`, `reconstruct`, `stability`,
/// `frequency`, `threeball`, `interp`, `chain`) into `out_dir` and returns
/// its `summary.json` as a dict.
#[pyfunction]
#[pyo3(signature = (command, config_json, out_dir, workers = None))]
fn run<'py>(
    py: Python<'py>,
    command: &str,
    config_json: &str,
    out_dir: PathBuf,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = load(config_json)?;
    cfg.output = out_dir.clone();
    if workers.is_some() {
        cfg.workers = workers;
    }
    let command = command.to_string();
    let summary = py
        .detach(|| -> inmed_core::Result<serde_json::Value> {
            let out = Output::new(&out_dir, &cfg)?;
            let go = || -> inmed_core::Result<()> {
                match command.as_str() {
                    "forward" => experiments::run_forward(&cfg, &out).map(drop),
                    "reconstruct" => experiments::run_reconstruct(&cfg, &out).map(drop),
                    "stability" => experiments::run_stability(&cfg, &out).map(drop),
                    "frequency" => experiments::run_frequency(&cfg, &out).map(drop),
                    "threeball" => experiments::run_threeball(&cfg, &out).map(drop),
                    "interp" => experiments::run_interp(&cfg, &out).map(drop),
                    "chain" => experiments::run_chain(&cfg, &out).map(drop),
                    other => Err(LabError::InvalidArgument(format!("unknown command {other:?}"))),
                }
            };
            match cfg.workers {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| LabError::InvalidArgument(format!("thread pool: {e}")))?
                    .install(go)?,
                None => go()?,
            }
            let text = std::fs::read_to_string(out_dir.join("summary.json"))?;
            Ok(serde_json::from_str(&text)?)
        })
        .map_err(to_py)?;
    json_to_py(py, &summary)
}

#[pymodule]
fn inmed(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("InmedError", m.py().get_type::<InmedError>())?;
    m.add_function(wrap_pyfunction!(config_hash, m)?)?;
    m.add_function(wrap_pyfunction!(forward, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
