//! Python bindings: scenario configs, channel draws, single solves, sweeps
//! and the built-in self-check.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ris_isac::channels::{generate, load_channels, save_channels, ChannelSet};
use ris_isac::driver::{solve as core_solve, solve_baseline, Method};
use ris_isac::fp::sum_rate as core_sum_rate;
use ris_isac::linalg::{CMat, CVec};
use ris_isac::scenario::{self, ScenarioGeometry};
use ris_isac::sweep::{load_sweep_spec, phase_rng, run_sweep, write_csv};

fn err(e: ris_isac::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Scenario parameters plus the link geometry used to draw channels.
#[pyclass(name = "SystemConfig", module = "ris_isac", skip_from_py_object)]
#[derive(Clone)]
pub struct PySystemConfig {
    inner: scenario::SystemConfig,
    geometry: ScenarioGeometry,
}

#[pymethods]
impl PySystemConfig {
    /// Desk-scale defaults (M=4, K=2, N=16, L=100, P=15 W, 5 dB floor).
    #[new]
    fn new() -> Self {
        PySystemConfig {
            inner: scenario::SystemConfig::desk_default(),
            geometry: ScenarioGeometry::default(),
        }
    }

    #[staticmethod]
    fn full_scale() -> Self {
        PySystemConfig {
            inner: scenario::SystemConfig::full_scale(),
            geometry: ScenarioGeometry::default(),
        }
    }

    #[staticmethod]
    fn from_toml(path: PathBuf) -> PyResult<Self> {
        let (inner, geometry) = scenario::load_config(&path).map_err(err)?;
        Ok(PySystemConfig { inner, geometry })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }
    #[setter]
    fn set_m(&mut self, value: usize) {
        self.inner.m = value;
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }
    #[setter]
    fn set_n(&mut self, value: usize) {
        self.inner.n = value;
    }

    #[getter]
    fn l(&self) -> usize {
        self.inner.l
    }
    #[setter]
    fn set_l(&mut self, value: usize) {
        self.inner.l = value;
    }

    #[getter]
    fn power(&self) -> f64 {
        self.inner.power
    }
    #[setter]
    fn set_power(&mut self, value: f64) {
        self.inner.power = value;
    }

    #[getter]
    fn gamma_t(&self) -> f64 {
        self.inner.gamma_t
    }
    #[setter]
    fn set_gamma_t(&mut self, value: f64) {
        self.inner.gamma_t = value;
    }

    #[getter]
    fn sigma_t2(&self) -> f64 {
        self.inner.sigma_t2
    }
    #[setter]
    fn set_sigma_t2(&mut self, value: f64) {
        self.inner.sigma_t2 = value;
    }

    #[getter]
    fn sigma_r2(&self) -> f64 {
        self.inner.sigma_r2
    }
    #[setter]
    fn set_sigma_r2(&mut self, value: f64) {
        self.inner.sigma_r2 = value;
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho
    }
    #[setter]
    fn set_rho(&mut self, value: f64) {
        self.inner.rho = value;
    }

    #[getter]
    fn tol_outer(&self) -> f64 {
        self.inner.tol_outer
    }
    #[setter]
    fn set_tol_outer(&mut self, value: f64) {
        self.inner.tol_outer = value;
    }

    #[getter]
    fn tol_inner(&self) -> f64 {
        self.inner.tol_inner
    }
    #[setter]
    fn set_tol_inner(&mut self, value: f64) {
        self.inner.tol_inner = value;
    }

    #[getter]
    fn tol_qp(&self) -> f64 {
        self.inner.tol_qp
    }
    #[setter]
    fn set_tol_qp(&mut self, value: f64) {
        self.inner.tol_qp = value;
    }

    #[getter]
    fn max_outer(&self) -> usize {
        self.inner.max_outer
    }
    #[setter]
    fn set_max_outer(&mut self, value: usize) {
        self.inner.max_outer = value;
    }

    #[getter]
    fn max_inner(&self) -> usize {
        self.inner.max_inner
    }
    #[setter]
    fn set_max_inner(&mut self, value: usize) {
        self.inner.max_inner = value;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }
    #[setter]
    fn set_seed(&mut self, value: u64) {
        self.inner.seed = value;
    }

    /// Changing `k` resizes the per-user noise list.
    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }
    #[setter]
    fn set_k(&mut self, k: usize) {
        self.inner.set_users(k);
    }

    #[getter]
    fn gamma_t_db(&self) -> f64 {
        self.inner.gamma_t_db()
    }
    #[setter]
    fn set_gamma_t_db(&mut self, db: f64) {
        self.inner.set_gamma_t_db(db);
    }

    #[getter]
    fn sigma_k2(&self) -> Vec<f64> {
        self.inner.sigma_k2.clone()
    }
    #[setter]
    fn set_sigma_k2(&mut self, v: Vec<f64>) {
        self.inner.sigma_k2 = v;
    }

    /// Raises `ValueError` listing every violated constraint.
    fn validate(&self) -> PyResult<()> {
        scenario::validate(&self.inner, &self.geometry).map_err(err)
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "SystemConfig(m={}, k={}, n={}, l={}, power={}, gamma_t_db={:.3}, seed={})",
            c.m,
            c.k,
            c.n,
            c.l,
            c.power,
            c.gamma_t_db(),
            c.seed
        )
    }
}

/// One channel realization.
#[pyclass(name = "Channels", module = "ris_isac", skip_from_py_object)]
#[derive(Clone)]
pub struct PyChannels {
    inner: ChannelSet,
}

fn to_list(v: &CVec) -> Vec<Complex64> {
    v.iter().copied().collect()
}

#[pymethods]
impl PyChannels {
    /// Draws channels for `config`, seeded by `seed` or the config seed.
    #[staticmethod]
    #[pyo3(signature = (config, seed=None))]
    fn generate(config: &PySystemConfig, seed: Option<u64>) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(config.inner.seed));
        PyChannels {
            inner: generate(&config.inner, &config.geometry, &mut rng),
        }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyChannels {
            inner: load_channels(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_channels(&self.inner, &path).map_err(err)
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }
    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }
    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    /// Direct BS-user channels, one list of length M per user.
    #[getter]
    fn h_d(&self) -> Vec<Vec<Complex64>> {
        self.inner.h_d.iter().map(to_list).collect()
    }
    #[getter]
    fn h_r(&self) -> Vec<Vec<Complex64>> {
        self.inner.h_r.iter().map(to_list).collect()
    }
    /// BS-RIS channel as N rows of length M.
    #[getter]
    fn g(&self) -> Vec<Vec<Complex64>> {
        self.inner.g.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
    #[getter]
    fn h_dt(&self) -> Vec<Complex64> {
        to_list(&self.inner.h_dt)
    }
    #[getter]
    fn h_rt(&self) -> Vec<Complex64> {
        to_list(&self.inner.h_rt)
    }

    fn fingerprint(&self) -> String {
        format!("{:016x}", self.inner.fingerprint())
    }
}

fn parse_method(name: &str) -> PyResult<Method> {
    name.parse::<Method>().map_err(PyValueError::new_err)
}

/// Solves one realization and returns the report as a dict. Baselines draw
/// their phases from the sweep stream of trial 0.
#[pyfunction]
#[pyo3(signature = (config, channels=None, method="proposed"))]
fn solve(py: Python<'_>, config: &PySystemConfig, channels: Option<&PyChannels>, method: &str) -> PyResult<Py<PyAny>> {
    let cfg = &config.inner;
    scenario::validate(cfg, &config.geometry).map_err(err)?;
    let cs = match channels {
        Some(c) => c.inner.clone(),
        None => generate(cfg, &config.geometry, &mut ChaCha8Rng::seed_from_u64(cfg.seed)),
    };
    cs.check_dims(cfg).map_err(err)?;
    let m = parse_method(method)?;
    let result = py
        .detach(|| match m {
            Method::Proposed => core_solve(&cs, cfg),
            _ => solve_baseline(&cs, cfg, m, &mut phase_rng(cfg.seed, 0)),
        })
        .map_err(err)?;
    json_to_py(py, &result.report(&cs, cfg).to_json())
}

/// Sum-rate in bit/s/Hz of `w` (M rows of K+M entries) and `phi`.
#[pyfunction]
fn sum_rate(config: &PySystemConfig, channels: &PyChannels, w: Vec<Vec<Complex64>>, phi: Vec<Complex64>) -> PyResult<f64> {
    let rows = w.len();
    let cols = w.first().map_or(0, Vec::len);
    if rows != channels.inner.m() || cols != channels.inner.k() + rows || w.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err(format!(
            "w must be {} rows of {} entries",
            channels.inner.m(),
            channels.inner.k() + channels.inner.m()
        )));
    }
    if phi.len() != channels.inner.n() {
        return Err(PyValueError::new_err(format!("phi must have {} entries", channels.inner.n())));
    }
    if config.inner.sigma_k2.len() != channels.inner.k() {
        return Err(PyValueError::new_err("config and channels disagree on K"));
    }
    let w = CMat::from_fn(rows, cols, |i, j| w[i][j]);
    Ok(core_sum_rate(&channels.inner, &CVec::from_vec(phi), &w, &config.inner.sigma_k2))
}

/// Runs the sweep described by a TOML file and returns the CSV text.
#[pyfunction]
#[pyo3(signature = (spec, trials=None, seed=None))]
fn sweep(py: Python<'_>, spec: PathBuf, trials: Option<usize>, seed: Option<u64>) -> PyResult<String> {
    let mut s = load_sweep_spec(&spec).map_err(err)?;
    if let Some(t) = trials {
        s.trials = t;
    }
    if let Some(seed) = seed {
        s.base.seed = seed;
    }
    s.validate().map_err(err)?;
    let result = py.detach(|| run_sweep(&s)).map_err(err)?;
    let mut buf = Vec::new();
    write_csv(&result, &mut buf).map_err(err)?;
    String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Built-in checks as `(name, passed, detail)` tuples.
#[pyfunction]
#[pyo3(signature = (seed=1))]
fn check(py: Python<'_>, seed: u64) -> Vec<(String, bool, String)> {
    py.detach(|| ris_isac::check::run_checks(seed))
        .into_iter()
        .map(|c| (c.name.to_string(), c.passed, c.detail))
        .collect()
}

#[pymodule]
#[pyo3(name = "ris_isac")]
fn ris_isac_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemConfig>()?;
    m.add_class::<PyChannels>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(sum_rate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add("METHODS", Method::ALL.iter().map(|m| m.label()).collect::<Vec<_>>())?;
    Ok(())
}
