//! Python bindings: scenario running plus the core estimator and
//! splitting primitives.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lbsim::config::ScenarioConfig;
use lbsim::router::{ema_step, EmaState as CoreEmaState};
use lbsim::runner::run_scenario;
use lbsim::sim::SimTime;
use lbsim::split::{compute_rates, pick_path as core_pick_path, SplitState};
use lbsim::topology::default_topology;
use lbsim::traffic::pareto_sample as core_pareto_sample;

fn to_py_err(err: lbsim::Error) -> PyErr {
    match err.exit_code() {
        1 => PyValueError::new_err(err.to_string()),
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

fn summary_dict<'py>(
    py: Python<'py>,
    out: &lbsim::engine::RunOutput,
) -> PyResult<Bound<'py, PyDict>> {
    let s = &out.summary;
    let d = PyDict::new(py);
    d.set_item("name", &s.name)?;
    d.set_item("seed", s.seed)?;
    d.set_item("duration_s", s.duration_s)?;
    d.set_item("generated", s.generated)?;
    d.set_item("delivered", s.delivered)?;
    d.set_item("drops_ef", s.drops[0])?;
    d.set_item("drops_af", s.drops[1])?;
    d.set_item("drops_be", s.drops[2])?;
    d.set_item("probing_rounds", s.probing_rounds)?;
    d.set_item("mean_throughput_pps", s.mean_throughput_pps)?;
    d.set_item("mean_delay_s", s.mean_delay_s)?;
    d.set_item("p50_delay_s", s.p50_delay_s)?;
    d.set_item("p95_delay_s", s.p95_delay_s)?;
    d.set_item("p99_delay_s", s.p99_delay_s)?;
    let rates = PyDict::new(py);
    for (id, r) in &s.final_rates {
        rates.set_item(id, r)?;
    }
    d.set_item("final_rates", rates)?;
    let sums = PyDict::new(py);
    for (id, v) in &s.final_sums {
        sums.set_item(id, v)?;
    }
    d.set_item("final_sums", sums)?;
    d.set_item("csv", &out.csv)?;
    Ok(d)
}

/// Run a scenario from a TOML string; returns a summary dict including the
/// stats CSV under the "csv" key.
#[pyfunction]
#[pyo3(signature = (toml, seed=None))]
fn run_scenario_toml<'py>(
    py: Python<'py>,
    toml: &str,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let config = ScenarioConfig::from_toml_str(toml).map_err(to_py_err)?;
    let out = run_scenario(&config, seed).map_err(to_py_err)?;
    summary_dict(py, &out)
}

/// Run a scenario from a TOML file path.
#[pyfunction]
#[pyo3(signature = (path, seed=None))]
fn run_scenario_file<'py>(
    py: Python<'py>,
    path: &str,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let config = ScenarioConfig::from_path(std::path::Path::new(path)).map_err(to_py_err)?;
    let out = run_scenario(&config, seed).map_err(to_py_err)?;
    summary_dict(py, &out)
}

/// Candidate paths of the stock seven-router topology, as node-name lists.
#[pyfunction]
fn default_paths() -> PyResult<Vec<Vec<String>>> {
    let topo = default_topology();
    let paths = topo.discover_paths(2).map_err(to_py_err)?;
    Ok(paths
        .iter()
        .map(|hops| {
            topo.full_node_sequence(hops)
                .iter()
                .map(|&n| topo.node_name(n).to_string())
                .collect()
        })
        .collect())
}

/// One moving-average step: `(1 - e^(-tau/k)) * current + e^(-tau/k) * old`.
#[pyfunction]
#[pyo3(name = "ema_step")]
fn ema_step_py(old: f64, current: f64, tau_s: f64, k_s: f64) -> f64 {
    ema_step(old, current, tau_s, k_s)
}

/// Pareto inverse CDF with location = scale: `scale * u^(-1/shape)`.
#[pyfunction]
fn pareto_sample(scale: f64, shape: f64, u: f64) -> PyResult<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(PyValueError::new_err("u must lie strictly inside (0, 1)"));
    }
    Ok(core_pareto_sample(scale, shape, u))
}

/// Split rates proportional to per-path scores; uniform when all are zero.
#[pyfunction]
fn split_rates(sums: BTreeMap<String, f64>) -> PyResult<BTreeMap<String, f64>> {
    let state = compute_rates(&sums, SimTime::ZERO).map_err(to_py_err)?;
    Ok(state.rates.into_iter().collect())
}

/// The path whose cumulative-rate interval contains `u` (rates in id order).
#[pyfunction]
fn pick_path(rates: BTreeMap<String, f64>, u: f64) -> PyResult<String> {
    if rates.is_empty() {
        return Err(PyValueError::new_err("rates must not be empty"));
    }
    if !(0.0..1.0).contains(&u) {
        return Err(PyValueError::new_err("u must lie in [0, 1)"));
    }
    let state = SplitState {
        rates,
        last_update: SimTime::ZERO,
    };
    Ok(core_pick_path(&state, u).to_string())
}

/// Per-class arrival-rate and buffer-length averages.
#[pyclass(name = "EmaState")]
struct PyEmaState {
    inner: CoreEmaState,
}

#[pymethods]
impl PyEmaState {
    #[new]
    #[pyo3(signature = (k_s=0.01))]
    fn new(k_s: f64) -> PyResult<Self> {
        if !(k_s.is_finite() && k_s > 0.0) {
            return Err(PyValueError::new_err("k_s must be > 0"));
        }
        Ok(PyEmaState {
            inner: CoreEmaState::new(k_s),
        })
    }

    /// Fold a packet of `pkt_bits` arriving at `now` (seconds) into the
    /// rate average; returns the new average in bits/second.
    fn update_rate(&mut self, pkt_bits: u64, now: f64) -> PyResult<f64> {
        if now < self.inner.last_rate_update.secs() {
            return Err(PyValueError::new_err("time moved backwards"));
        }
        self.inner.update_rate(pkt_bits, SimTime::from_secs(now));
        Ok(self.inner.avg_rate_bps)
    }

    /// Fold the instantaneous buffer length observed at `now` into the
    /// buffer average; returns the new average in packets.
    fn update_buffer(&mut self, inst_buffer_pkts: u32, now: f64) -> PyResult<f64> {
        if now < self.inner.last_buffer_update.secs() {
            return Err(PyValueError::new_err("time moved backwards"));
        }
        self.inner
            .update_buffer(inst_buffer_pkts, SimTime::from_secs(now));
        Ok(self.inner.avg_buffer_pkts)
    }

    #[getter]
    fn avg_rate_bps(&self) -> f64 {
        self.inner.avg_rate_bps
    }

    #[getter]
    fn avg_buffer_pkts(&self) -> f64 {
        self.inner.avg_buffer_pkts
    }
}

#[pymodule]
fn lbsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(run_scenario_toml, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario_file, m)?)?;
    m.add_function(wrap_pyfunction!(default_paths, m)?)?;
    m.add_function(wrap_pyfunction!(ema_step_py, m)?)?;
    m.add_function(wrap_pyfunction!(pareto_sample, m)?)?;
    m.add_function(wrap_pyfunction!(split_rates, m)?)?;
    m.add_function(wrap_pyfunction!(pick_path, m)?)?;
    m.add_class::<PyEmaState>()?;
    Ok(())
}
