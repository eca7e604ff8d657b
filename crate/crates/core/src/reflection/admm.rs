//! ADMM over the splitting `φ = ψ`, `|ψ_n| = 1`.
//!
//! The `φ`-block is a strongly convex quadratic over the unit disks and the
//! linearized radar half-space; it is solved by accelerated projected
//! gradient with an exact projection. The `ψ`-block is a phase projection.

use crate::error::{Error, Result};
use crate::fp::CompactForms;
use crate::linalg::{hdot, hermitian_max_eigenvalue, CVec, C64};
use crate::scenario::{PenaltyScaling, SystemConfig};

use super::SurrogateData;

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    /// Relaxed iterate, `|φ_n| ≤ 1`.
    pub phi: CVec,
    /// Unit-modulus iterate.
    pub varphi: CVec,
    /// Scaled dual of `φ − ψ = 0`.
    pub mu: CVec,
    pub rho: f64,
}

impl AdmmState {
    pub fn new(phi: CVec, rho: f64) -> Self {
        let n = phi.len();
        AdmmState {
            varphi: phi.clone(),
            phi,
            mu: CVec::zeros(n),
            rho,
        }
    }

    /// `‖φ − ψ‖∞`.
    pub fn residual(&self) -> f64 {
        crate::linalg::max_abs_diff(&self.phi, &self.varphi)
    }
}

#[derive(Debug, Clone)]
pub struct ReflectionOutcome {
    /// Unit-modulus result.
    pub phi: CVec,
    /// Last relaxed iterate.
    pub relaxed: CVec,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub residual_history: Vec<f64>,
    /// Penalty actually used.
    pub rho: f64,
}

fn disk(z: &CVec) -> CVec {
    z.map(|x| {
        let r = x.norm();
        if r > 1.0 {
            x / r
        } else {
            x
        }
    })
}

/// Euclidean projection onto `{|x_n| ≤ 1} ∩ {Re{nᴴx} ≤ offset}`.
///
/// The minimizer is `disk(z − ν n)` for the smallest `ν ≥ 0` that meets the
/// half-space, found by bisection.
pub fn project_disks_halfspace(z: &CVec, normal: &CVec, offset: f64) -> Result<CVec> {
    let x0 = disk(z);
    let side = |x: &CVec| hdot(normal, x).re;
    if side(&x0) <= offset {
        return Ok(x0);
    }
    let reach = -normal.iter().map(|c| c.norm()).sum::<f64>();
    if reach > offset {
        return Err(Error::Infeasible(format!(
            "linearized radar constraint unreachable on the unit disks ({reach:.6e} > {offset:.6e})"
        )));
    }
    let at = |nu: f64| disk(&(z - normal * C64::from(nu)));

    let mut hi = 1.0 / normal.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut x_hi = at(hi);
    let mut doublings = 0;
    while side(&x_hi) > offset {
        doublings += 1;
        if doublings > 200 {
            // only reachable when offset sits exactly on −‖n‖₁
            return Ok(CVec::from_fn(z.len(), |i, _| {
                let n = normal[i];
                if n.norm() > 0.0 {
                    -n / n.norm()
                } else {
                    x0[i]
                }
            }));
        }
        hi *= 2.0;
        x_hi = at(hi);
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let x = at(mid);
        if side(&x) > offset {
            lo = mid;
        } else {
            hi = mid;
            x_hi = x;
        }
    }
    Ok(x_hi)
}

const MAX_GRADIENT_STEPS: usize = 100_000;

/// The penalty starts at this fraction of its target and grows by
/// `RHO_GROWTH` per iteration until it reaches the target.
pub const RHO_START_FRACTION: f64 = 1e-2;
pub const RHO_GROWTH: f64 = 1.1;

/// Minimizes `φᴴ(D + ρ/2 I)φ − Re{(g + ρt)ᴴφ}` with `t = ψ − μ/ρ` over the
/// disks and the linearized radar half-space.
pub fn solve_phi_step(
    compact: &CompactForms,
    surrogate: &SurrogateData,
    state: &AdmmState,
    tol_qp: f64,
) -> Result<CVec> {
    let d_max = hermitian_max_eigenvalue(&compact.d).max(0.0);
    phi_step_with(compact, surrogate, state, tol_qp, d_max)
}

fn phi_step_with(
    compact: &CompactForms,
    surrogate: &SurrogateData,
    state: &AdmmState,
    tol_qp: f64,
    d_max: f64,
) -> Result<CVec> {
    let rho = state.rho;
    let t = &state.varphi - &state.mu / C64::from(rho);
    let b = &compact.g + &t * C64::from(rho);
    let (normal, offset) = surrogate.halfspace();
    let project = |z: &CVec| project_disks_halfspace(z, &normal, offset);

    let lip = 2.0 * d_max + rho;
    let kappa = lip / rho;
    let beta = (kappa.sqrt() - 1.0) / (kappa.sqrt() + 1.0);
    let grad = |y: &CVec| (&compact.d * y) * C64::from(2.0) + y * C64::from(rho) - &b;

    let mut x = project(&state.phi)?;
    let mut x_prev = x.clone();
    for _ in 0..MAX_GRADIENT_STEPS {
        let y = &x + (&x - &x_prev) * C64::from(beta);
        let x_new = project(&(&y - grad(&y) / C64::from(lip)))?;
        let step = crate::linalg::max_abs_diff(&x_new, &y);
        x_prev = std::mem::replace(&mut x, x_new);
        if step <= tol_qp {
            return Ok(x);
        }
    }
    log::debug!("φ-step stopped at the gradient step cap");
    Ok(x)
}

/// `ψ = exp(j∠(ρφ + μ))`; entries with a zero argument keep `previous`.
pub fn update_varphi(phi: &CVec, mu: &CVec, rho: f64, previous: &CVec) -> CVec {
    CVec::from_fn(phi.len(), |i, _| {
        let z = phi[i] * rho + mu[i];
        if z == C64::new(0.0, 0.0) {
            previous[i]
        } else {
            z / z.norm()
        }
    })
}

/// `μ ← μ + ρ(φ − ψ)`.
pub fn update_mu(state: &mut AdmmState) {
    let delta = (&state.phi - &state.varphi) * C64::from(state.rho);
    state.mu += delta;
}

/// Penalty used by the inner loop for the given compact forms.
pub fn effective_rho(compact: &CompactForms, config: &SystemConfig, d_max: f64) -> f64 {
    match config.penalty_scaling {
        PenaltyScaling::Absolute => config.rho,
        PenaltyScaling::Curvature => {
            let g_inf = compact.g.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let scale = 2.0 * d_max + g_inf;
            if scale > 0.0 && scale.is_finite() {
                config.rho * scale
            } else {
                config.rho
            }
        }
    }
}

/// Runs ADMM from `phi_init` until `‖φ − ψ‖∞ ≤ tol_inner` and `ψ` moves by
/// at most `tol_inner`, or `max_inner` iterations. The penalty ramps up to
/// the effective `ρ` (see `RHO_START_FRACTION`).
pub fn solve_reflection(
    compact: &CompactForms,
    surrogate: &SurrogateData,
    phi_init: &CVec,
    config: &SystemConfig,
) -> Result<ReflectionOutcome> {
    let d_max = hermitian_max_eigenvalue(&compact.d).max(0.0);
    let rho = effective_rho(compact, config, d_max);
    let mut state = AdmmState::new(phi_init.clone(), rho * RHO_START_FRACTION);
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_inner {
        state.phi = phi_step_with(compact, surrogate, &state, config.tol_qp, d_max)?;
        let previous = state.varphi.clone();
        state.varphi = update_varphi(&state.phi, &state.mu, state.rho, &previous);
        update_mu(&mut state);
        state.rho = (state.rho * RHO_GROWTH).min(rho);
        let res = state.residual();
        history.push(res);
        // a warm start can land on the circle with zero primal residual after
        // one proximal step, so the iterate must also have stopped moving
        let moved = crate::linalg::max_abs_diff(&state.varphi, &previous);
        if res <= config.tol_inner && moved <= config.tol_inner {
            converged = true;
            break;
        }
    }
    let residual = history.last().copied().unwrap_or(0.0);
    if !converged {
        log::debug!("ADMM stopped after {} iterations, residual {residual:.3e}", history.len());
    }
    Ok(ReflectionOutcome {
        phi: state.varphi,
        relaxed: state.phi,
        iterations: history.len(),
        residual,
        converged,
        residual_history: history,
        rho,
    })
}
