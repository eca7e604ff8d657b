//! System parameters, scenario geometry, unit conversions and validation.

mod file;

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use file::{load_config, parse_config};

/// Path loss at the 1 m reference distance (−30 dB).
pub const REFERENCE_PATH_LOSS: f64 = 1e-3;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Distance-dependent large-scale gain `PL0 · d^(−alpha)`.
pub fn path_loss(distance: f64, exponent: f64) -> f64 {
    REFERENCE_PATH_LOSS * distance.powf(-exponent)
}

/// Which inequality the linearized radar constraint uses inside the
/// reflection step. `Derived` (`Re{ũᴴφ} ≤ ε4`) is the direction that follows
/// from the majorizer; `Reversed` flips it and exists for comparison runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SurrogateSign {
    #[default]
    Derived,
    Reversed,
}

/// How the configured ADMM penalty is interpreted.
///
/// `Curvature` multiplies `rho` by `2·λmax(D) + ‖g‖∞` of the current
/// reflection subproblem so that the penalty tracks the problem scale;
/// `Absolute` uses `rho` as given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyScaling {
    #[default]
    Curvature,
    Absolute,
}

/// All scalar parameters of one scenario. Powers are in Watts, ratios linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Antennas at the base station (transmit = receive).
    pub m: usize,
    /// Single-antenna users.
    pub k: usize,
    /// RIS elements.
    pub n: usize,
    /// Radar samples per coherent block.
    pub l: usize,
    /// Transmit power budget.
    pub power: f64,
    /// Worst-case radar SNR floor.
    pub gamma_t: f64,
    /// Target radar cross section power.
    pub sigma_t2: f64,
    /// Radar receiver noise power.
    pub sigma_r2: f64,
    /// Per-user noise power.
    pub sigma_k2: Vec<f64>,
    /// ADMM penalty.
    pub rho: f64,
    pub tol_outer: f64,
    pub tol_inner: f64,
    pub tol_qp: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub seed: u64,
    pub surrogate_sign: SurrogateSign,
    pub penalty_scaling: PenaltyScaling,
}

pub const DEFAULT_TOL_OUTER: f64 = 1e-4;
pub const DEFAULT_TOL_INNER: f64 = 1e-4;
pub const DEFAULT_TOL_QP: f64 = 1e-8;
pub const DEFAULT_MAX_OUTER: usize = 100;
pub const DEFAULT_MAX_INNER: usize = 500;
pub const DEFAULT_RHO: f64 = 1.0;

impl SystemConfig {
    /// Small scenario used for tests and quick sweeps: M=4, K=2, N=16, L=100,
    /// P=15 W, Γt=5 dB, −80 dBm noise.
    pub fn desk_default() -> Self {
        Self::with_dims(4, 2, 16, 100)
    }

    /// The full-size scenario: M=8, K=4, N=100, L=1000.
    pub fn full_scale() -> Self {
        Self::with_dims(8, 4, 100, 1000)
    }

    fn with_dims(m: usize, k: usize, n: usize, l: usize) -> Self {
        SystemConfig {
            m,
            k,
            n,
            l,
            power: 15.0,
            gamma_t: db_to_linear(5.0),
            sigma_t2: 1.0,
            sigma_r2: dbm_to_watts(-80.0),
            sigma_k2: vec![dbm_to_watts(-80.0); k],
            rho: DEFAULT_RHO,
            tol_outer: DEFAULT_TOL_OUTER,
            tol_inner: DEFAULT_TOL_INNER,
            tol_qp: DEFAULT_TOL_QP,
            max_outer: DEFAULT_MAX_OUTER,
            max_inner: DEFAULT_MAX_INNER,
            seed: 1,
            surrogate_sign: SurrogateSign::Derived,
            penalty_scaling: PenaltyScaling::Curvature,
        }
    }

    /// Number of beamformer columns, `K + M`.
    pub fn streams(&self) -> usize {
        self.k + self.m
    }

    /// Changes the user count, keeping the first user's noise power for all.
    pub fn set_users(&mut self, k: usize) {
        let noise = self.sigma_k2.first().copied().unwrap_or(1e-11);
        self.k = k;
        self.sigma_k2 = vec![noise; k];
    }

    pub fn gamma_t_db(&self) -> f64 {
        linear_to_db(self.gamma_t)
    }

    pub fn set_gamma_t_db(&mut self, db: f64) {
        self.gamma_t = db_to_linear(db);
    }

    /// Every violated invariant, in a fixed order.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [("antenna count M", self.m), ("user count K", self.k)] {
            if v < 1 {
                out.push(format!("{name} must be at least 1"));
            }
        }
        if self.n < 1 {
            out.push("RIS element count N must be at least 1".into());
        }
        if self.l < 1 {
            out.push("sample count L must be at least 1".into());
        }
        if !(self.power > 0.0) || !self.power.is_finite() {
            out.push("power budget must be positive".into());
        }
        if !(self.gamma_t > 0.0) || !self.gamma_t.is_finite() {
            out.push("radar SNR threshold must be positive".into());
        }
        if !(self.sigma_t2 > 0.0) || !self.sigma_t2.is_finite() {
            out.push("target RCS power must be positive".into());
        }
        if !(self.sigma_r2 > 0.0) || !self.sigma_r2.is_finite() {
            out.push("radar noise power must be positive".into());
        }
        if self.sigma_k2.len() != self.k {
            out.push(format!(
                "user noise list has {} entries but K = {}",
                self.sigma_k2.len(),
                self.k
            ));
        }
        if self.sigma_k2.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            out.push("user noise powers must be positive".into());
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            out.push("ADMM penalty rho must be positive".into());
        }
        for (name, tol) in [
            ("tol_outer", self.tol_outer),
            ("tol_inner", self.tol_inner),
            ("tol_qp", self.tol_qp),
        ] {
            if !(tol > 0.0) || !tol.is_finite() {
                out.push(format!("{name} must be positive"));
            }
        }
        if self.max_outer < 1 {
            out.push("max_outer must be at least 1".into());
        }
        if self.max_inner < 1 {
            out.push("max_inner must be at least 1".into());
        }
        out
    }
}

/// A distance that is either fixed or drawn uniformly from `[min, max]` once
/// per channel realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "DistanceSpec", into = "DistanceSpec")]
pub struct DistanceRange {
    pub min: f64,
    pub max: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DistanceSpec {
    Fixed(f64),
    Range([f64; 2]),
}

impl From<DistanceSpec> for DistanceRange {
    fn from(s: DistanceSpec) -> Self {
        match s {
            DistanceSpec::Fixed(d) => DistanceRange::fixed(d),
            DistanceSpec::Range([min, max]) => DistanceRange { min, max },
        }
    }
}

impl From<DistanceRange> for DistanceSpec {
    fn from(r: DistanceRange) -> Self {
        if r.min == r.max {
            DistanceSpec::Fixed(r.min)
        } else {
            DistanceSpec::Range([r.min, r.max])
        }
    }
}

impl DistanceRange {
    pub fn fixed(d: f64) -> Self {
        DistanceRange { min: d, max: d }
    }

    pub fn new(min: f64, max: f64) -> Self {
        DistanceRange { min, max }
    }

    pub fn is_fixed(&self) -> bool {
        self.min == self.max
    }
}

/// Link distances (m), path-loss exponents and array angles (rad).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGeometry {
    pub d_bs_ris: f64,
    pub d_ris_target: f64,
    pub d_ris_user: f64,
    pub d_bs_target: DistanceRange,
    pub d_bs_user: DistanceRange,
    pub alpha_bs_ris: f64,
    pub alpha_ris_target: f64,
    pub alpha_ris_user: f64,
    pub alpha_bs_target: f64,
    pub alpha_bs_user: f64,
    /// Target azimuth seen from both the BS and the RIS.
    pub target_azimuth: f64,
    /// Departure angle at the BS array towards the RIS.
    pub theta_bs_to_ris: f64,
    /// Arrival angle at the RIS array from the BS.
    pub theta_ris_from_bs: f64,
}

pub const DEFAULT_THETA_BS_TO_RIS: f64 = FRAC_PI_4;
pub const DEFAULT_THETA_RIS_FROM_BS: f64 = -FRAC_PI_4;

impl Default for ScenarioGeometry {
    fn default() -> Self {
        ScenarioGeometry {
            d_bs_ris: 50.0,
            d_ris_target: 3.0,
            d_ris_user: 8.0,
            d_bs_target: DistanceRange::new(50.0, 53.0),
            d_bs_user: DistanceRange::new(50.0, 58.0),
            alpha_bs_ris: 2.2,
            alpha_ris_target: 2.2,
            alpha_ris_user: 2.3,
            alpha_bs_target: 2.4,
            alpha_bs_user: 3.5,
            target_azimuth: 0.0,
            theta_bs_to_ris: DEFAULT_THETA_BS_TO_RIS,
            theta_ris_from_bs: DEFAULT_THETA_RIS_FROM_BS,
        }
    }
}

impl ScenarioGeometry {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let fixed = [
            ("BS-RIS", self.d_bs_ris),
            ("RIS-target", self.d_ris_target),
            ("RIS-user", self.d_ris_user),
        ];
        for (name, d) in fixed {
            if !(d > 0.0) || !d.is_finite() {
                out.push(format!("{name} distance must be positive"));
            }
        }
        for (name, r) in [("BS-target", self.d_bs_target), ("BS-user", self.d_bs_user)] {
            if !(r.min > 0.0) || !r.max.is_finite() {
                out.push(format!("{name} distance must be positive"));
            } else if r.max < r.min {
                out.push(format!("{name} distance range is reversed"));
            }
        }
        let exponents = [
            ("BS-RIS", self.alpha_bs_ris),
            ("RIS-target", self.alpha_ris_target),
            ("RIS-user", self.alpha_ris_user),
            ("BS-target", self.alpha_bs_target),
            ("BS-user", self.alpha_bs_user),
        ];
        for (name, a) in exponents {
            if !(a >= 2.0) || !a.is_finite() {
                out.push(format!("{name} path-loss exponent must be at least 2"));
            }
        }
        for (name, a) in [
            ("target azimuth", self.target_azimuth),
            ("BS departure angle", self.theta_bs_to_ris),
            ("RIS arrival angle", self.theta_ris_from_bs),
        ] {
            if !a.is_finite() {
                out.push(format!("{name} must be finite"));
            }
        }
        out
    }
}

/// Checks every invariant of both structures and reports all violations.
pub fn validate(config: &SystemConfig, geometry: &ScenarioGeometry) -> Result<()> {
    let mut v = config.violations();
    v.extend(geometry.violations());
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(v))
    }
}
