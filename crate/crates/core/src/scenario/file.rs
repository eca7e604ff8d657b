//! TOML scenario files.
//!
//! ```toml
//! [system]
//! m = 4
//! k = 2
//! n = 16
//! l = 100
//! p = 15.0                 # W
//! gamma_t_db = 5.0         # or gamma_t (linear)
//! sigma_t2 = 1.0
//! sigma_r2_dbm = -80.0     # or sigma_r2 (W)
//! sigma_k2_dbm = -80.0     # scalar or list of K values; or sigma_k2 (W)
//! seed = 7
//! # optional: rho, tol_outer, tol_inner, tol_qp, max_outer, max_inner,
//! #           surrogate_sign, penalty_scaling
//!
//! [geometry]
//! d_bs_ris = 50.0
//! d_ris_target = 3.0
//! d_ris_user = 8.0
//! d_bs_target = [50.0, 53.0]
//! d_bs_user = [50.0, 58.0]
//! alpha_bs_ris = 2.2
//! alpha_ris_target = 2.2
//! alpha_ris_user = 2.3
//! alpha_bs_target = 2.4
//! alpha_bs_user = 3.5
//! # optional angles in degrees: target_azimuth_deg, theta_bs_to_ris_deg,
//! #                             theta_ris_from_bs_deg
//! ```

use std::path::Path;

use serde::Deserialize;

use super::*;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    system: Option<RawSystem>,
    geometry: Option<RawGeometry>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    m: Option<usize>,
    k: Option<usize>,
    n: Option<usize>,
    l: Option<usize>,
    p: Option<f64>,
    gamma_t: Option<f64>,
    gamma_t_db: Option<f64>,
    sigma_t2: Option<f64>,
    sigma_r2: Option<f64>,
    sigma_r2_dbm: Option<f64>,
    sigma_k2: Option<OneOrMany>,
    sigma_k2_dbm: Option<OneOrMany>,
    seed: Option<u64>,
    rho: Option<f64>,
    tol_outer: Option<f64>,
    tol_inner: Option<f64>,
    tol_qp: Option<f64>,
    max_outer: Option<usize>,
    max_inner: Option<usize>,
    surrogate_sign: Option<SurrogateSign>,
    penalty_scaling: Option<PenaltyScaling>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    d_bs_ris: Option<f64>,
    d_ris_target: Option<f64>,
    d_ris_user: Option<f64>,
    d_bs_target: Option<DistanceRange>,
    d_bs_user: Option<DistanceRange>,
    alpha_bs_ris: Option<f64>,
    alpha_ris_target: Option<f64>,
    alpha_ris_user: Option<f64>,
    alpha_bs_target: Option<f64>,
    alpha_bs_user: Option<f64>,
    target_azimuth_deg: Option<f64>,
    theta_bs_to_ris_deg: Option<f64>,
    theta_ris_from_bs_deg: Option<f64>,
}

struct Missing(Vec<String>);

impl Missing {
    fn take<T>(&mut self, v: Option<T>, name: &str) -> Option<T> {
        if v.is_none() {
            self.0.push(format!("missing field `{name}`"));
        }
        v
    }

    fn either<T>(&mut self, a: Option<T>, b: Option<T>, names: (&str, &str)) -> Option<(T, bool)> {
        match (a, b) {
            (Some(x), None) => Some((x, true)),
            (None, Some(x)) => Some((x, false)),
            (None, None) => {
                self.0
                    .push(format!("missing field `{}` (or `{}`)", names.0, names.1));
                None
            }
            (Some(_), Some(_)) => {
                self.0
                    .push(format!("fields `{}` and `{}` are exclusive", names.0, names.1));
                None
            }
        }
    }
}

/// Parses and validates a scenario from TOML text. `origin` is only used in
/// error messages.
pub fn parse_config(text: &str, origin: &Path) -> Result<(SystemConfig, ScenarioGeometry)> {
    let raw: RawFile = toml::from_str(text).map_err(|e| Error::parse(origin, e))?;
    let mut missing = Missing(Vec::new());

    let sys = missing.take(raw.system, "[system]");
    let geo = missing.take(raw.geometry, "[geometry]");

    let config = sys.and_then(|s| build_system(s, &mut missing));
    let geometry = geo.and_then(|g| build_geometry(g, &mut missing));

    let mut problems = missing.0;
    if let (Some(c), Some(g)) = (&config, &geometry) {
        problems.extend(c.violations());
        problems.extend(g.violations());
    }
    match (config, geometry) {
        (Some(c), Some(g)) if problems.is_empty() => Ok((c, g)),
        _ => Err(Error::InvalidConfig(problems)),
    }
}

pub fn load_config(path: &Path) -> Result<(SystemConfig, ScenarioGeometry)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

fn build_system(s: RawSystem, miss: &mut Missing) -> Option<SystemConfig> {
    let m = miss.take(s.m, "m");
    let k = miss.take(s.k, "k");
    let n = miss.take(s.n, "n");
    let l = miss.take(s.l, "l");
    let p = miss.take(s.p, "p");
    let gamma = miss
        .either(s.gamma_t, s.gamma_t_db, ("gamma_t", "gamma_t_db"))
        .map(|(v, linear)| if linear { v } else { db_to_linear(v) });
    let sigma_t2 = miss.take(s.sigma_t2, "sigma_t2");
    let sigma_r2 = miss
        .either(s.sigma_r2, s.sigma_r2_dbm, ("sigma_r2", "sigma_r2_dbm"))
        .map(|(v, watts)| if watts { v } else { dbm_to_watts(v) });
    let sigma_k2 = miss
        .either(s.sigma_k2, s.sigma_k2_dbm, ("sigma_k2", "sigma_k2_dbm"))
        .map(|(v, watts)| {
            let conv = |x: f64| if watts { x } else { dbm_to_watts(x) };
            match v {
                OneOrMany::One(x) => vec![conv(x); k.unwrap_or(0)],
                OneOrMany::Many(xs) => xs.into_iter().map(conv).collect(),
            }
        });
    let seed = miss.take(s.seed, "seed");

    Some(SystemConfig {
        m: m?,
        k: k?,
        n: n?,
        l: l?,
        power: p?,
        gamma_t: gamma?,
        sigma_t2: sigma_t2?,
        sigma_r2: sigma_r2?,
        sigma_k2: sigma_k2?,
        rho: s.rho.unwrap_or(DEFAULT_RHO),
        tol_outer: s.tol_outer.unwrap_or(DEFAULT_TOL_OUTER),
        tol_inner: s.tol_inner.unwrap_or(DEFAULT_TOL_INNER),
        tol_qp: s.tol_qp.unwrap_or(DEFAULT_TOL_QP),
        max_outer: s.max_outer.unwrap_or(DEFAULT_MAX_OUTER),
        max_inner: s.max_inner.unwrap_or(DEFAULT_MAX_INNER),
        seed: seed?,
        surrogate_sign: s.surrogate_sign.unwrap_or_default(),
        penalty_scaling: s.penalty_scaling.unwrap_or_default(),
    })
}

fn build_geometry(g: RawGeometry, miss: &mut Missing) -> Option<ScenarioGeometry> {
    let d_bs_ris = miss.take(g.d_bs_ris, "d_bs_ris");
    let d_ris_target = miss.take(g.d_ris_target, "d_ris_target");
    let d_ris_user = miss.take(g.d_ris_user, "d_ris_user");
    let d_bs_target = miss.take(g.d_bs_target, "d_bs_target");
    let d_bs_user = miss.take(g.d_bs_user, "d_bs_user");
    let alpha_bs_ris = miss.take(g.alpha_bs_ris, "alpha_bs_ris");
    let alpha_ris_target = miss.take(g.alpha_ris_target, "alpha_ris_target");
    let alpha_ris_user = miss.take(g.alpha_ris_user, "alpha_ris_user");
    let alpha_bs_target = miss.take(g.alpha_bs_target, "alpha_bs_target");
    let alpha_bs_user = miss.take(g.alpha_bs_user, "alpha_bs_user");
    Some(ScenarioGeometry {
        d_bs_ris: d_bs_ris?,
        d_ris_target: d_ris_target?,
        d_ris_user: d_ris_user?,
        d_bs_target: d_bs_target?,
        d_bs_user: d_bs_user?,
        alpha_bs_ris: alpha_bs_ris?,
        alpha_ris_target: alpha_ris_target?,
        alpha_ris_user: alpha_ris_user?,
        alpha_bs_target: alpha_bs_target?,
        alpha_bs_user: alpha_bs_user?,
        target_azimuth: g.target_azimuth_deg.map_or(0.0, f64::to_radians),
        theta_bs_to_ris: g
            .theta_bs_to_ris_deg
            .map_or(DEFAULT_THETA_BS_TO_RIS, f64::to_radians),
        theta_ris_from_bs: g
            .theta_ris_from_bs_deg
            .map_or(DEFAULT_THETA_RIS_FROM_BS, f64::to_radians),
    })
}
