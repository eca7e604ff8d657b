//! Quick self-check on small random instances, run by `ris-isac check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channels::{generate, ChannelSet};
use crate::driver::solve;
use crate::fp::{sum_rate, transformed_objective, update_aux};
use crate::linalg::{hdot, max_abs_diff, norm_sqr, vec_columns, CMat, CVec, C64};
use crate::qp::{solve_qp, Gram, QpProblem};
use crate::radar::update_u;
use crate::reflection::{build_surrogate, expand_target_response};
use crate::scenario::{ScenarioGeometry, SurrogateSign, SystemConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn rand_c(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn unit_phases(n: usize, rng: &mut ChaCha8Rng) -> CVec {
    CVec::from_fn(n, |_, _| C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
}

fn unit_scale_channels(m: usize, n: usize, k: usize, rng: &mut ChaCha8Rng) -> ChannelSet {
    ChannelSet {
        h_d: (0..k).map(|_| CVec::from_fn(m, |_, _| rand_c(rng))).collect(),
        h_r: (0..k).map(|_| CVec::from_fn(n, |_, _| rand_c(rng))).collect(),
        g: CMat::from_fn(n, m, |_, _| rand_c(rng)),
        h_dt: CVec::from_fn(m, |_, _| rand_c(rng)),
        h_rt: CVec::from_fn(n, |_, _| rand_c(rng)),
    }
}

fn vectorization(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (m, n, k) = (rng.random_range(1..5), rng.random_range(1..9), rng.random_range(1..3));
        let cs = unit_scale_channels(m, n, k, &mut rng);
        let w = CMat::from_fn(m, k + m, |_, _| rand_c(&mut rng));
        let phi = unit_phases(n, &mut rng);
        let direct = cs.apply_target(&phi, &vec_columns(&w));
        worst = worst.max(max_abs_diff(&expand_target_response(&cs, &w, &phi), &direct));
    }
    CheckOutcome {
        name: "target response expansion",
        passed: worst <= 1e-10,
        detail: format!("max deviation {worst:.2e}"),
    }
}

fn fp_tightness(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = SystemConfig::desk_default();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let cs = generate(&cfg, &ScenarioGeometry::default(), &mut rng);
        let w = CMat::from_fn(cfg.m, cfg.streams(), |_, _| rand_c(&mut rng));
        let phi = unit_phases(cfg.n, &mut rng);
        let aux = update_aux(&cs, &phi, &w, &cfg.sigma_k2);
        let f = transformed_objective(&cs, &phi, &w, &aux, &cfg.sigma_k2);
        worst = worst.max((f - sum_rate(&cs, &phi, &w, &cfg.sigma_k2)).abs());
    }
    CheckOutcome {
        name: "fractional-programming tightness",
        passed: worst <= 1e-9,
        detail: format!("max gap {worst:.2e}"),
    }
}

fn majorization(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_bound, mut worst_touch) = (f64::NEG_INFINITY, 0.0f64);
    for _ in 0..5 {
        let cs = unit_scale_channels(2, 4, 2, &mut rng);
        let w = CMat::from_fn(2, 4, |_, _| rand_c(&mut rng));
        let u = CVec::from_fn(8, |_, _| rand_c(&mut rng));
        let phi_hat = unit_phases(4, &mut rng);
        let s = build_surrogate(&cs, &w, &u, &phi_hat, 0.1, SurrogateSign::Derived);
        worst_touch = worst_touch.max((s.majorizer(&phi_hat) - s.quadratic(&phi_hat)).abs());
        for _ in 0..200 {
            let phi = unit_phases(4, &mut rng);
            worst_bound = worst_bound.max(s.quadratic(&phi) - s.majorizer(&phi));
        }
    }
    CheckOutcome {
        name: "majorizer bound",
        passed: worst_bound <= 1e-9 && worst_touch <= 1e-10,
        detail: format!("max violation {worst_bound:.2e}, gap at expansion point {worst_touch:.2e}"),
    }
}

fn qp_kkt(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..10 {
        let x = CMat::from_fn(4, 4, |_, _| rand_c(&mut rng));
        let problem = QpProblem {
            gram: Gram::Dense(&x * x.adjoint()),
            linear: CVec::from_fn(4, |_, _| rand_c(&mut rng)),
            halfspace_normal: CVec::from_fn(4, |_, _| rand_c(&mut rng)),
            halfspace_offset: rng.random_range(0.0..1.0),
            power: rng.random_range(0.5..2.0),
        };
        match solve_qp(&problem, 1e-10) {
            Ok(sol) => {
                worst = worst.max(sol.power_residual.max(0.0)).max(sol.radar_residual.max(0.0));
                // no feasible point along random directions improves the objective
                for _ in 0..200 {
                    let d = CVec::from_fn(4, |_, _| rand_c(&mut rng)) * C64::from(1e-3);
                    let trial = &sol.w + d;
                    if problem.is_feasible(&trial, 0.0) && problem.objective(&trial) < sol.objective - 1e-9 {
                        failures += 1;
                    }
                }
            }
            Err(_) => failures += 1,
        }
    }
    CheckOutcome {
        name: "beamforming QP",
        passed: failures == 0 && worst <= 1e-8,
        detail: format!("max residual {worst:.2e}, {failures} improving perturbations"),
    }
}

fn solver_run(seed: u64) -> CheckOutcome {
    let cfg = SystemConfig::desk_default();
    let mut issues = Vec::new();
    for s in 0..3 {
        let cs = generate(&cfg, &ScenarioGeometry::default(), &mut ChaCha8Rng::seed_from_u64(seed + s));
        match solve(&cs, &cfg) {
            Ok(r) if r.is_success() => {
                let st = r.state.as_ref().expect("successful run has a state");
                if r.trace.windows(2).any(|p| p[1].sum_rate < p[0].sum_rate - 1e-6) {
                    issues.push(format!("seed {}: sum-rate decreased", seed + s));
                }
                if norm_sqr(&vec_columns(&st.w)) > cfg.power + 1e-8 {
                    issues.push(format!("seed {}: power exceeded", seed + s));
                }
                if r.radar_snr.unwrap_or(0.0) < cfg.gamma_t * (1.0 - 1e-6) {
                    issues.push(format!("seed {}: radar floor violated", seed + s));
                }
                let u = update_u(&cs, &st.phi, &vec_columns(&st.w)).map(|u| u.u);
                if let Ok(u) = u {
                    if hdot(&u, &cs.apply_target(&st.phi, &vec_columns(&st.w))).im.abs() > 1e-9 {
                        issues.push(format!("seed {}: filter response not real", seed + s));
                    }
                }
            }
            Ok(r) => issues.push(format!("seed {}: {:?}", seed + s, r.termination)),
            Err(e) => issues.push(format!("seed {}: {e}", seed + s)),
        }
    }
    CheckOutcome {
        name: "full solve",
        passed: issues.is_empty(),
        detail: if issues.is_empty() { "3 runs monotone and feasible".into() } else { issues.join("; ") },
    }
}

/// Runs every check with the given seed.
pub fn run_checks(seed: u64) -> Vec<CheckOutcome> {
    vec![
        vectorization(seed),
        fp_tightness(seed.wrapping_add(1)),
        majorization(seed.wrapping_add(2)),
        qp_kkt(seed.wrapping_add(3)),
        solver_run(seed.wrapping_add(4)),
    ]
}
