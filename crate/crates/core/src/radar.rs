//! Radar receive filter, worst-case SNR and the linearized radar constraint.

use crate::channels::{apply_rank_one, ChannelSet};
use crate::error::{Error, Result};
use crate::linalg::{hdot, norm_sqr, CVec, C64};
use crate::scenario::SystemConfig;

/// Below this norm the target response is treated as absent.
pub const DEGENERATE_RESPONSE: f64 = 1e-14;

/// Receive filter over the stacked `M(K+M)` observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiveFilter {
    pub u: CVec,
}

/// `L σt² |uᴴ(I⊗H_t(φ))w|² / (σr² uᴴu)`, the Jensen lower bound on the
/// matched-filter radar SNR.
pub fn radar_snr_bound(
    cs: &ChannelSet,
    phi: &CVec,
    w: &CVec,
    u: &CVec,
    config: &SystemConfig,
) -> Result<f64> {
    let uu = norm_sqr(u);
    if uu == 0.0 {
        return Err(Error::Dimension("receive filter is zero".into()));
    }
    let x = cs.apply_target(phi, w);
    Ok(config.l as f64 * config.sigma_t2 * hdot(u, &x).norm_sqr() / (config.sigma_r2 * uu))
}

/// Best achievable bound over all filters, `L σt² ‖(I⊗H_t)w‖² / σr²`.
pub fn max_radar_snr(cs: &ChannelSet, phi: &CVec, w: &CVec, config: &SystemConfig) -> f64 {
    let x = cs.apply_target(phi, w);
    config.l as f64 * config.sigma_t2 * norm_sqr(&x) / config.sigma_r2
}

/// Rayleigh-quotient maximizer `u = (I⊗H_t)w / (wᴴ(I⊗H_tᴴH_t)w)`.
///
/// With this scaling `uᴴ(I⊗H_t)w = 1`, real and positive.
pub fn update_u(cs: &ChannelSet, phi: &CVec, w: &CVec) -> Result<ReceiveFilter> {
    let x = cs.apply_target(phi, w);
    let energy = norm_sqr(&x);
    if energy.sqrt() < DEGENERATE_RESPONSE {
        return Err(Error::Degenerate(format!(
            "target response norm {:.3e} below {DEGENERATE_RESPONSE:e}",
            energy.sqrt()
        )));
    }
    Ok(ReceiveFilter {
        u: x / C64::from(energy),
    })
}

/// `ε3 = √(Γt σr² uᴴu / (L σt²))`.
pub fn epsilon3(u: &CVec, config: &SystemConfig) -> f64 {
    (config.gamma_t * config.sigma_r2 * norm_sqr(u) / (config.l as f64 * config.sigma_t2)).sqrt()
}

/// `v = (I⊗H_t(φ))ᴴ u`, so that `Re{vᴴw} = Re{uᴴ(I⊗H_t(φ))w}`.
pub fn constraint_normal(cs: &ChannelSet, phi: &CVec, u: &CVec) -> CVec {
    // (b bᵀ)ᴴ = b* bᴴ, which is rank one with vector b*
    let b = cs.target_response(phi).map(|z| z.conj());
    apply_rank_one(&b, u)
}

/// `Re{uᴴ(I⊗H_t(φ))w}`.
pub fn radar_response(cs: &ChannelSet, phi: &CVec, w: &CVec, u: &CVec) -> f64 {
    hdot(u, &cs.apply_target(phi, w)).re
}

/// Whether `Re{vᴴw} ≥ ε3` is reachable with `‖w‖² ≤ P`, i.e. `√P‖v‖ ≥ ε3`.
pub fn feasibility_check(v: &CVec, power: f64, eps3: f64) -> bool {
    power.sqrt() * norm_sqr(v).sqrt() >= eps3
}
