//! Outer block-coordinate loop: `r → c → u → w → φ`, plus the two baselines.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::ChannelSet;
use crate::error::{Error, Result};
use crate::fp::{assemble_compact, sum_rate, update_aux, AuxiliaryState};
use crate::linalg::{norm_sqr, unvec_columns, vec_columns, CMat, CVec, C64};
use crate::qp::{solve_qp_or_keep, Gram, KktCase, QpProblem};
use crate::radar::{
    constraint_normal, epsilon3, feasibility_check, max_radar_snr, radar_response, update_u,
    ReceiveFilter,
};
use crate::reflection::{build_surrogate, solve_reflection};
use crate::scenario::{linear_to_db, SystemConfig};

/// Which design is run.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Proposed,
    RandomRis,
    NoRis,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Proposed, Method::RandomRis, Method::NoRis];

    pub fn label(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::RandomRis => "random-ris",
            Method::NoRis => "no-ris",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected proposed, random-ris or no-ris)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIterations,
    Infeasible,
    Degenerate,
}

/// One outer iteration, recorded after the `φ` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub sum_rate: f64,
    /// Transformed objective at the `(r, c)` used during the iteration.
    pub objective: f64,
    /// Radar SNR bound with the optimal receive filter.
    pub radar_snr: f64,
    /// `‖W‖_F² − P`.
    pub power_residual: f64,
    /// `Re{uᴴ(I⊗H_t(φ))w} − ε3` for the filter used in the iteration.
    pub radar_margin: f64,
    pub qp_case: KktCase,
    pub phi_accepted: bool,
    pub inner_iterations: usize,
    pub inner_residual: f64,
    pub elapsed_s: f64,
}

/// Final iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub w: CMat,
    pub phi: CVec,
    pub u: ReceiveFilter,
    pub aux: AuxiliaryState,
    pub trace: Vec<TraceRecord>,
}

/// Outcome of one solve. Quantities are absent when there is no solution.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub method: Method,
    pub termination: Termination,
    pub iterations: usize,
    pub sum_rate: Option<f64>,
    pub radar_snr: Option<f64>,
    pub power: Option<f64>,
    pub state: Option<SolverState>,
    pub trace: Vec<TraceRecord>,
    pub diagnostic: Option<String>,
    pub wall_time_s: f64,
}

impl SolveResult {
    pub fn is_success(&self) -> bool {
        matches!(
            self.termination,
            Termination::Converged | Termination::MaxIterations
        )
    }

    fn failed(method: Method, termination: Termination, message: String, start: Instant) -> Self {
        SolveResult {
            method,
            termination,
            iterations: 0,
            sum_rate: None,
            radar_snr: None,
            power: None,
            state: None,
            trace: Vec::new(),
            diagnostic: Some(message),
            wall_time_s: start.elapsed().as_secs_f64(),
        }
    }

    pub fn report(&self, cs: &ChannelSet, config: &SystemConfig) -> SolveReport {
        SolveReport {
            method: self.method,
            termination: self.termination,
            iterations: self.iterations,
            sum_rate: self.sum_rate,
            radar_snr: self.radar_snr,
            radar_snr_db: self.radar_snr.map(linear_to_db),
            power: self.power,
            diagnostic: self.diagnostic.clone(),
            solution: self.state.as_ref().map(|s| SolutionDump {
                w: s.w.column_iter().map(|c| c.iter().map(|z| [z.re, z.im]).collect()).collect(),
                phi: s.phi.iter().map(|z| [z.re, z.im]).collect(),
                u: s.u.u.iter().map(|z| [z.re, z.im]).collect(),
            }),
            trace: self.trace.clone(),
            metadata: ReportMetadata {
                m: config.m,
                k: config.k,
                n: config.n,
                l: config.l,
                power_budget: config.power,
                gamma_t_db: config.gamma_t_db(),
                seed: config.seed,
                rho: config.rho,
                tol_outer: config.tol_outer,
                tol_inner: config.tol_inner,
                tol_qp: config.tol_qp,
                max_outer: config.max_outer,
                max_inner: config.max_inner,
                surrogate_sign: config.surrogate_sign,
                penalty_scaling: config.penalty_scaling,
                initialization: "cascaded-target phase alignment, matched-filter columns".into(),
                channel_fingerprint: format!("{:016x}", cs.fingerprint()),
                wall_time_s: self.wall_time_s,
            },
        }
    }
}

/// Serialized form of a solve; see the README for the field reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub termination: Termination,
    pub iterations: usize,
    pub sum_rate: Option<f64>,
    pub radar_snr: Option<f64>,
    pub radar_snr_db: Option<f64>,
    pub power: Option<f64>,
    pub diagnostic: Option<String>,
    pub solution: Option<SolutionDump>,
    pub trace: Vec<TraceRecord>,
    pub metadata: ReportMetadata,
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Complex entries as `[re, im]`; `w` is a list of columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDump {
    pub w: Vec<Vec<[f64; 2]>>,
    pub phi: Vec<[f64; 2]>,
    pub u: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub l: usize,
    pub power_budget: f64,
    pub gamma_t_db: f64,
    pub seed: u64,
    pub rho: f64,
    pub tol_outer: f64,
    pub tol_inner: f64,
    pub tol_qp: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub surrogate_sign: crate::scenario::SurrogateSign,
    pub penalty_scaling: crate::scenario::PenaltyScaling,
    pub initialization: String,
    pub channel_fingerprint: String,
    pub wall_time_s: f64,
}

/// Phases that align the cascaded target return with the direct one at the
/// first antenna.
pub fn initial_phases(cs: &ChannelSet) -> CVec {
    let reference = cs.h_dt.get(0).map(|z| z.arg()).unwrap_or(0.0);
    CVec::from_fn(cs.n(), |n, _| {
        let cascade = if cs.m() > 0 { cs.g[(n, 0)] * cs.h_rt[n] } else { C64::new(0.0, 0.0) };
        C64::from_polar(1.0, reference - cascade.arg())
    })
}

/// Matched-filter columns for the users and the target, scaled to `‖W‖_F² = P`.
pub fn initial_beamformer(cs: &ChannelSet, phi: &CVec, config: &SystemConfig) -> CMat {
    let m = cs.m();
    let mut w = CMat::zeros(m, config.streams());
    let unit_conj = |h: &CVec| {
        let nrm = norm_sqr(h).sqrt();
        if nrm > 0.0 {
            h.map(|z| z.conj() / nrm)
        } else {
            CVec::zeros(h.len())
        }
    };
    for (k, h) in cs.composite_user_channels(phi).iter().enumerate() {
        w.set_column(k, &unit_conj(h));
    }
    let b = unit_conj(&cs.target_response(phi));
    for j in cs.k()..config.streams() {
        w.set_column(j, &b);
    }
    let total = w.norm_squared();
    if total > 0.0 {
        w *= C64::from((config.power / total).sqrt());
    } else {
        w.fill(C64::from((config.power / (m * config.streams()) as f64).sqrt()));
    }
    w
}

pub fn initialize(cs: &ChannelSet, config: &SystemConfig) -> (CMat, CVec) {
    let phi = initial_phases(cs);
    let w = initial_beamformer(cs, &phi, config);
    (w, phi)
}

fn noise(config: &SystemConfig) -> &[f64] {
    &config.sigma_k2
}

/// The full design: alternating `r, c, u, w, φ` until the sum-rate settles.
pub fn solve(cs: &ChannelSet, config: &SystemConfig) -> Result<SolveResult> {
    let (w, phi) = initialize(cs, config);
    run(cs, config, w, phi, true, Method::Proposed)
}

/// Fixed-reflection baselines. `random-ris` draws its phases from `rng`;
/// `no-ris` zeroes every reflected link and ignores `rng`.
pub fn solve_baseline<R: Rng + ?Sized>(
    cs: &ChannelSet,
    config: &SystemConfig,
    mode: Method,
    rng: &mut R,
) -> Result<SolveResult> {
    match mode {
        Method::Proposed => solve(cs, config),
        Method::NoRis => {
            let bare = cs.without_ris();
            let (w, phi) = initialize(&bare, config);
            run(&bare, config, w, phi, false, Method::NoRis)
        }
        Method::RandomRis => {
            let phi = random_phases(cs.n(), rng);
            let w = initial_beamformer(cs, &phi, config);
            run(cs, config, w, phi, false, Method::RandomRis)
        }
    }
}

pub fn random_phases<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec {
    CVec::from_fn(n, |_, _| {
        C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
    })
}

fn check_inputs(cs: &ChannelSet, config: &SystemConfig) -> Result<()> {
    let v = config.violations();
    if !v.is_empty() {
        return Err(Error::InvalidConfig(v));
    }
    cs.check_dims(config)
}

fn run(
    cs: &ChannelSet,
    config: &SystemConfig,
    mut w: CMat,
    mut phi: CVec,
    optimize_phi: bool,
    method: Method,
) -> Result<SolveResult> {
    let start = Instant::now();
    check_inputs(cs, config)?;
    let noise = noise(config);
    let m = config.m;

    let mut u = match update_u(cs, &phi, &vec_columns(&w)) {
        Ok(u) => u,
        Err(Error::Degenerate(msg)) => {
            return Ok(SolveResult::failed(method, Termination::Degenerate, msg, start))
        }
        Err(e) => return Err(e),
    };
    let v0 = constraint_normal(cs, &phi, &u.u);
    let eps0 = epsilon3(&u.u, config);
    if !feasibility_check(&v0, config.power, eps0) {
        let best = config.power * max_radar_snr(cs, &phi, &vec_columns(&w), config)
            / norm_sqr(&vec_columns(&w)).max(f64::MIN_POSITIVE);
        return Ok(SolveResult::failed(
            method,
            Termination::Infeasible,
            format!(
                "radar SNR floor {:.3} dB unreachable: at most {:.3} dB with full power",
                config.gamma_t_db(),
                linear_to_db(best)
            ),
            start,
        ));
    }

    let mut trace: Vec<TraceRecord> = Vec::new();
    let mut aux = update_aux(cs, &phi, &w, noise);
    let mut termination = Termination::MaxIterations;
    let mut diagnostic = None;

    for iteration in 1..=config.max_outer {
        // r, c
        aux = update_aux(cs, &phi, &w, noise);
        // u
        let w_vec = vec_columns(&w);
        u = match update_u(cs, &phi, &w_vec) {
            Ok(u) => u,
            Err(Error::Degenerate(msg)) => {
                termination = Termination::Degenerate;
                diagnostic = Some(msg);
                break;
            }
            Err(e) => return Err(e),
        };
        let eps3 = epsilon3(&u.u, config);

        // w
        let compact = assemble_compact(cs, &phi, &w, &aux, noise);
        let problem = QpProblem {
            gram: Gram::BlockDiagonal {
                block: compact.gram_block.clone(),
                repeats: config.streams(),
            },
            linear: compact.a.clone(),
            halfspace_normal: constraint_normal(cs, &phi, &u.u),
            halfspace_offset: eps3,
            power: config.power,
        };
        let qp = match solve_qp_or_keep(&problem, config.tol_qp, Some(&w_vec)) {
            Ok(s) => s,
            Err(Error::Infeasible(msg)) => {
                termination = Termination::Infeasible;
                diagnostic = Some(msg);
                break;
            }
            Err(e) => return Err(e),
        };
        w = unvec_columns(&qp.w, m);
        let w_vec = qp.w.clone();

        // φ
        let mut phi_accepted = false;
        let (mut inner_iterations, mut inner_residual) = (0, 0.0);
        let compact_phi = assemble_compact(cs, &phi, &w, &aux, noise);
        if optimize_phi {
            let surrogate = build_surrogate(cs, &w, &u.u, &phi, eps3, config.surrogate_sign);
            match solve_reflection(&compact_phi, &surrogate, &phi, config) {
                Ok(out) => {
                    inner_iterations = out.iterations;
                    inner_residual = out.residual;
                    let candidate = out.phi;
                    let radar_ok = radar_response(cs, &candidate, &w_vec, &u.u) >= eps3;
                    let gain = compact_phi.objective_phi(&candidate)
                        - compact_phi.objective_phi(&phi);
                    if radar_ok && gain >= 0.0 {
                        phi = candidate;
                        phi_accepted = true;
                    }
                }
                Err(Error::Infeasible(msg)) => {
                    log::debug!("reflection step skipped: {msg}");
                }
                Err(e) => return Err(e),
            }
        }

        let objective = crate::fp::transformed_objective(cs, &phi, &w, &aux, noise);
        let rate = sum_rate(cs, &phi, &w, noise);
        trace.push(TraceRecord {
            iteration,
            sum_rate: rate,
            objective,
            radar_snr: max_radar_snr(cs, &phi, &w_vec, config),
            power_residual: norm_sqr(&w_vec) - config.power,
            radar_margin: radar_response(cs, &phi, &w_vec, &u.u) - eps3,
            qp_case: qp.kkt_case,
            phi_accepted,
            inner_iterations,
            inner_residual,
            elapsed_s: start.elapsed().as_secs_f64(),
        });
        if let [.., prev, last] = trace.as_slice() {
            if (last.sum_rate - prev.sum_rate).abs() <= config.tol_outer {
                termination = Termination::Converged;
                break;
            }
        }
    }

    if trace.is_empty() {
        let msg = diagnostic.unwrap_or_else(|| "no iteration completed".into());
        return Ok(SolveResult::failed(method, termination, msg, start));
    }

    let w_vec = vec_columns(&w);
    let final_u = update_u(cs, &phi, &w_vec).unwrap_or(u);
    let radar_snr = max_radar_snr(cs, &phi, &w_vec, config);
    let rate = sum_rate(cs, &phi, &w, noise);
    Ok(SolveResult {
        method,
        termination,
        iterations: trace.len(),
        sum_rate: Some(rate),
        radar_snr: Some(radar_snr),
        power: Some(norm_sqr(&w_vec)),
        state: Some(SolverState {
            w,
            phi,
            u: final_u,
            aux,
            trace: trace.clone(),
        }),
        trace,
        diagnostic,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
