//! Monte-Carlo sweeps over transmit power, RIS size or the radar SNR floor.
//!
//! Trial `t` draws its channels from stream `2t` of a ChaCha8 generator seeded
//! with the base seed, and the random-RIS phases from stream `2t + 1`, so every
//! method and every swept value sees the same realizations at a given trial.
//!
//! Sweep files are TOML:
//!
//! ```toml
//! param = "power"              # power | elements | radar_snr
//! values = [5.0, 15.0, 25.0]   # W | count | dB
//! trials = 20
//! methods = ["proposed", "random-ris", "no-ris"]
//! config = "desk.toml"         # optional, relative to this file
//! ```

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{generate, ChannelSet};
use crate::driver::{solve, solve_baseline, Method, SolveResult};
use crate::error::{Error, Result};
use crate::scenario::{load_config, validate, ScenarioGeometry, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Power,
    Elements,
    RadarSnr,
}

impl SweepParam {
    pub fn label(self) -> &'static str {
        match self {
            SweepParam::Power => "power",
            SweepParam::Elements => "elements",
            SweepParam::RadarSnr => "radar_snr",
        }
    }

    /// `base` with the swept parameter set to `value`.
    pub fn apply(self, base: &SystemConfig, value: f64) -> SystemConfig {
        let mut cfg = base.clone();
        match self {
            SweepParam::Power => cfg.power = value,
            SweepParam::Elements => cfg.n = value as usize,
            SweepParam::RadarSnr => cfg.set_gamma_t_db(value),
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub base: SystemConfig,
    pub geometry: ScenarioGeometry,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    param: SweepParam,
    values: Vec<f64>,
    trials: Option<usize>,
    methods: Option<Vec<Method>>,
    config: Option<PathBuf>,
}

pub const DEFAULT_TRIALS: usize = 20;

impl SweepSpec {
    pub fn new(param: SweepParam, values: Vec<f64>, base: SystemConfig) -> Self {
        SweepSpec {
            param,
            values,
            trials: DEFAULT_TRIALS,
            methods: Method::ALL.to_vec(),
            base,
            geometry: ScenarioGeometry::default(),
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.values.is_empty() {
            out.push("sweep value list is empty".into());
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            out.push("sweep values must be strictly increasing".into());
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            out.push("sweep values must be finite".into());
        }
        if self.param == SweepParam::Elements
            && self.values.iter().any(|&v| v < 1.0 || v.fract() != 0.0)
        {
            out.push("element counts must be positive integers".into());
        }
        if self.trials < 1 {
            out.push("trials must be at least 1".into());
        }
        if self.methods.is_empty() {
            out.push("method list is empty".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = self.violations();
        for &value in &self.values {
            if let Err(Error::InvalidConfig(more)) =
                validate(&self.param.apply(&self.base, value), &self.geometry)
            {
                for m in more {
                    let m = format!("at {} = {value}: {m}", self.param.label());
                    if !v.contains(&m) {
                        v.push(m);
                    }
                }
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }
}

/// Reads a sweep file. Without a `config` entry the desk-scale defaults are
/// used.
pub fn load_sweep_spec(path: &Path) -> Result<SweepSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: RawSpec = toml::from_str(&text).map_err(|e| Error::parse(path, e))?;
    let (base, geometry) = match raw.config {
        Some(rel) => {
            let resolved = path.parent().unwrap_or(Path::new(".")).join(rel);
            load_config(&resolved)?
        }
        None => (SystemConfig::desk_default(), ScenarioGeometry::default()),
    };
    let spec = SweepSpec {
        param: raw.param,
        values: raw.values,
        trials: raw.trials.unwrap_or(DEFAULT_TRIALS),
        methods: raw.methods.unwrap_or_else(|| Method::ALL.to_vec()),
        base,
        geometry,
    };
    spec.validate()?;
    Ok(spec)
}

/// Generator for the channels of trial `t`.
pub fn channel_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * trial as u64);
    rng
}

/// Generator for the random-RIS phases of trial `t`.
pub fn phase_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * trial as u64 + 1);
    rng
}

pub fn trial_channels(config: &SystemConfig, geometry: &ScenarioGeometry, trial: usize) -> ChannelSet {
    generate(config, geometry, &mut channel_rng(config.seed, trial))
}

/// Runs one method on trial `t`.
pub fn run_trial(
    config: &SystemConfig,
    cs: &ChannelSet,
    method: Method,
    trial: usize,
) -> Result<SolveResult> {
    match method {
        Method::Proposed => solve(cs, config),
        m => solve_baseline(cs, config, m, &mut phase_rng(config.seed, trial)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: Method,
    pub param: SweepParam,
    pub value: f64,
    /// Absent when every trial failed.
    pub mean_sum_rate: Option<f64>,
    pub std_sum_rate: Option<f64>,
    pub trials: usize,
    pub mean_iters: Option<f64>,
    pub failures: usize,
}

impl SweepRow {
    pub fn all_failed(&self) -> bool {
        self.failures == self.trials
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, method: Method, value: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.method == method && r.value == value)
    }

    pub fn any_cell_failed(&self) -> bool {
        self.rows.iter().any(SweepRow::all_failed)
    }

    /// Means of one method in value order.
    pub fn means(&self, method: Method) -> Vec<Option<f64>> {
        self.rows
            .iter()
            .filter(|r| r.method == method)
            .map(|r| r.mean_sum_rate)
            .collect()
    }
}

/// Per-trial outcome of one method: final sum-rate and iterations, or `None`.
type Outcome = Option<(f64, usize)>;

fn summarize(method: Method, param: SweepParam, value: f64, outcomes: &[Outcome]) -> SweepRow {
    let ok: Vec<(f64, usize)> = outcomes.iter().flatten().copied().collect();
    let n = ok.len();
    let (mean, std, iters) = if n == 0 {
        (None, None, None)
    } else {
        let mean = ok.iter().map(|o| o.0).sum::<f64>() / n as f64;
        let var = if n > 1 {
            ok.iter().map(|o| (o.0 - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let iters = ok.iter().map(|o| o.1 as f64).sum::<f64>() / n as f64;
        (Some(mean), Some(var.sqrt()), Some(iters))
    };
    SweepRow {
        method,
        param,
        value,
        mean_sum_rate: mean,
        std_sum_rate: std,
        trials: outcomes.len(),
        mean_iters: iters,
        failures: outcomes.len() - n,
    }
}

/// Runs every `(value, trial)` pair in parallel; all methods of a trial share
/// one channel draw.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let cells: Vec<(usize, usize)> = (0..spec.values.len())
        .flat_map(|v| (0..spec.trials).map(move |t| (v, t)))
        .collect();
    let outcomes: Vec<Vec<Outcome>> = cells
        .par_iter()
        .map(|&(vi, t)| {
            let cfg = spec.param.apply(&spec.base, spec.values[vi]);
            let cs = trial_channels(&cfg, &spec.geometry, t);
            log::debug!(
                "{}={} trial {t}: channels {:016x}",
                spec.param.label(),
                spec.values[vi],
                cs.fingerprint()
            );
            spec.methods
                .iter()
                .map(|&m| match run_trial(&cfg, &cs, m, t) {
                    Ok(r) if r.is_success() => r.sum_rate.map(|s| (s, r.iterations)),
                    Ok(r) => {
                        log::info!("{m} trial {t}: {:?} {}", r.termination, r.diagnostic.unwrap_or_default());
                        None
                    }
                    Err(e) => {
                        log::warn!("{m} trial {t}: {e}");
                        None
                    }
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::new();
    for (mi, &method) in spec.methods.iter().enumerate() {
        for (vi, &value) in spec.values.iter().enumerate() {
            let cell: Vec<Outcome> = (0..spec.trials)
                .map(|t| outcomes[vi * spec.trials + t][mi])
                .collect();
            rows.push(summarize(method, spec.param, value, &cell));
        }
    }
    Ok(SweepResult { rows })
}

pub const CSV_HEADER: [&str; 8] = [
    "method",
    "param",
    "value",
    "mean_sum_rate",
    "std_sum_rate",
    "trials",
    "mean_iters",
    "failures",
];

/// Writes the header and one row per cell, in the order of `result.rows`.
pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    wtr.write_record(CSV_HEADER)?;
    for row in &result.rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_csv(result, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn parse_csv(text: &str) -> Result<SweepResult> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::parse("<csv>", format!("unexpected header {header:?}")));
    }
    let rows = rdr.deserialize().collect::<std::result::Result<Vec<SweepRow>, _>>()?;
    Ok(SweepResult { rows })
}
