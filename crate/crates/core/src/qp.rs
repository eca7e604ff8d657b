//! Transmit-beamforming subproblem
//!
//! ```text
//! minimize   wᴴ G w − Re{aᴴw}
//! subject to Re{vᴴw} ≥ ε3,  ‖w‖² ≤ P
//! ```
//!
//! with `G = BᴴB` Hermitian PSD. Stationarity gives
//! `(2G + 2μI) w = a + λv` for multipliers `λ` (radar) and `μ` (power). In the
//! eigenbasis of `G` the solve is diagonal. For a fixed `μ` the optimal `λ` is
//! closed form, and the partially maximized dual is concave in `μ` with
//! derivative `‖w(μ)‖² − P`, so `μ` is found by bisection. This covers all
//! four activity patterns of the two constraints.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hdot, norm_sqr, CMat, CVec, C64};

/// The quadratic term `BᴴB`, either dense or block diagonal with identical
/// blocks (the beamforming case, one block per column of `W`).
#[derive(Debug, Clone)]
pub enum Gram {
    Dense(CMat),
    BlockDiagonal { block: CMat, repeats: usize },
}

impl Gram {
    pub fn dim(&self) -> usize {
        match self {
            Gram::Dense(g) => g.nrows(),
            Gram::BlockDiagonal { block, repeats } => block.nrows() * repeats,
        }
    }

    pub fn to_dense(&self) -> CMat {
        match self {
            Gram::Dense(g) => g.clone(),
            Gram::BlockDiagonal { block, repeats } => {
                let m = block.nrows();
                let mut out = CMat::zeros(m * repeats, m * repeats);
                for r in 0..*repeats {
                    out.view_mut((r * m, r * m), (m, m)).copy_from(block);
                }
                out
            }
        }
    }

    pub fn apply(&self, w: &CVec) -> CVec {
        match self {
            Gram::Dense(g) => g * w,
            Gram::BlockDiagonal { block, .. } => {
                let m = block.nrows();
                let mut out = CVec::zeros(w.len());
                for (j, chunk) in w.as_slice().chunks(m).enumerate() {
                    let y = block * CVec::from_column_slice(chunk);
                    out.rows_mut(j * m, m).copy_from(&y);
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub gram: Gram,
    pub linear: CVec,
    pub halfspace_normal: CVec,
    pub halfspace_offset: f64,
    pub power: f64,
}

impl QpProblem {
    /// `wᴴGw − Re{aᴴw}`.
    pub fn objective(&self, w: &CVec) -> f64 {
        hdot(w, &self.gram.apply(w)).re - hdot(&self.linear, w).re
    }

    pub fn power_residual(&self, w: &CVec) -> f64 {
        (norm_sqr(w) - self.power).max(0.0)
    }

    pub fn radar_residual(&self, w: &CVec) -> f64 {
        (self.halfspace_offset - hdot(&self.halfspace_normal, w).re).max(0.0)
    }

    pub fn is_feasible(&self, w: &CVec, tol: f64) -> bool {
        self.power_residual(w) <= tol && self.radar_residual(w) <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KktCase {
    Unconstrained,
    PowerActive,
    RadarActive,
    BothActive,
    /// The previous iterate was kept.
    Fallback,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub w: CVec,
    pub kkt_case: KktCase,
    pub objective: f64,
    pub power_residual: f64,
    pub radar_residual: f64,
    /// `λ`, multiplier of the radar half-space.
    pub radar_multiplier: f64,
    /// `μ`, multiplier of the power ball.
    pub power_multiplier: f64,
}

/// Eigendecomposition of the Gram matrix, kept blockwise when possible.
struct EigenBasis {
    values: Vec<f64>,
    vectors: CMat,
    block: usize,
}

impl EigenBasis {
    fn new(gram: &Gram) -> Self {
        let (mat, repeats) = match gram {
            Gram::Dense(g) => (g.clone(), 1),
            Gram::BlockDiagonal { block, repeats } => (block.clone(), *repeats),
        };
        let block = mat.nrows();
        let herm = (&mat + mat.adjoint()) * C64::from(0.5);
        let eig = SymmetricEigen::new(herm);
        let base: Vec<f64> = eig.eigenvalues.iter().map(|&d| d.max(0.0)).collect();
        let values = (0..repeats).flat_map(|_| base.iter().copied()).collect();
        EigenBasis {
            values,
            vectors: eig.eigenvectors,
            block,
        }
    }

    fn to_basis(&self, x: &CVec) -> CVec {
        self.map(x, &self.vectors.adjoint())
    }

    fn from_basis(&self, x: &CVec) -> CVec {
        self.map(x, &self.vectors)
    }

    fn map(&self, x: &CVec, m: &CMat) -> CVec {
        let mut out = CVec::zeros(x.len());
        if self.block == 0 {
            return out;
        }
        for (j, chunk) in x.as_slice().chunks(self.block).enumerate() {
            let y = m * CVec::from_column_slice(chunk);
            out.rows_mut(j * self.block, self.block).copy_from(&y);
        }
        out
    }
}

struct DualEval {
    lambda: f64,
    w: CVec,
    norm2: f64,
}

struct Dual<'a> {
    d: &'a [f64],
    a: CVec,
    v: CVec,
    eps3: f64,
}

impl Dual<'_> {
    fn eval(&self, mu: f64) -> DualEval {
        let mut beta = 0.0;
        let mut gamma = 0.0;
        for i in 0..self.d.len() {
            let s = 1.0 / (self.d[i] + mu);
            beta += s * (self.v[i].conj() * self.a[i]).re;
            gamma += s * self.v[i].norm_sqr();
        }
        let lambda = if gamma > 0.0 {
            ((2.0 * self.eps3 - beta) / gamma).max(0.0)
        } else {
            0.0
        };
        let w = CVec::from_fn(self.d.len(), |i, _| {
            (self.a[i] + self.v[i] * lambda) * (0.5 / (self.d[i] + mu))
        });
        let norm2 = norm_sqr(&w);
        DualEval { lambda, w, norm2 }
    }
}

const MAX_DOUBLINGS: usize = 2000;
const MAX_BISECTIONS: usize = 400;

/// Solves the two-constraint QP to KKT precision.
pub fn solve_qp(problem: &QpProblem, tol_qp: f64) -> Result<QpSolution> {
    let n = problem.gram.dim();
    if problem.linear.len() != n || problem.halfspace_normal.len() != n {
        return Err(Error::Dimension(format!(
            "QP of dimension {n} with linear term {} and normal {}",
            problem.linear.len(),
            problem.halfspace_normal.len()
        )));
    }
    let power = problem.power;
    let eps3 = problem.halfspace_offset;
    let v_norm = norm_sqr(&problem.halfspace_normal).sqrt();
    if eps3 > 0.0 && !crate::radar::feasibility_check(&problem.halfspace_normal, power, eps3) {
        return Err(Error::Infeasible(format!(
            "√P‖v‖ = {:.6e} < ε3 = {eps3:.6e}",
            power.sqrt() * v_norm
        )));
    }

    let basis = EigenBasis::new(&problem.gram);
    let dual = Dual {
        d: &basis.values,
        a: basis.to_basis(&problem.linear),
        v: basis.to_basis(&problem.halfspace_normal),
        eps3,
    };
    let d_max = basis.values.iter().copied().fold(0.0, f64::max);
    let d_min = basis.values.iter().copied().fold(f64::INFINITY, f64::min);

    let finish = |eval: DualEval, mu: f64| {
        let w = basis.from_basis(&eval.w);
        let radar_active = eval.lambda > 0.0;
        let power_active = mu > 0.0 && eval.norm2 >= power * (1.0 - 1e-9);
        let kkt_case = match (radar_active, power_active) {
            (false, false) => KktCase::Unconstrained,
            (false, true) => KktCase::PowerActive,
            (true, false) => KktCase::RadarActive,
            (true, true) => KktCase::BothActive,
        };
        QpSolution {
            objective: problem.objective(&w),
            power_residual: problem.power_residual(&w),
            radar_residual: problem.radar_residual(&w),
            w,
            kkt_case,
            radar_multiplier: eval.lambda,
            power_multiplier: mu,
        }
    };

    // μ = 0 is only admissible when G is nonsingular
    if n > 0 && d_min > 1e-13 * d_max.max(f64::MIN_POSITIVE) {
        let e = dual.eval(0.0);
        if e.norm2 <= power {
            return Ok(finish(e, 0.0));
        }
    }
    if n == 0 {
        return Ok(finish(dual.eval(1.0), 0.0));
    }

    let a_norm = norm_sqr(&problem.linear).sqrt();
    let mut hi = d_max.max(a_norm / (2.0 * power.sqrt())).max(1e-30);
    let mut lo = 0.0;
    let mut hi_eval = dual.eval(hi);
    let mut doublings = 0;
    while hi_eval.norm2 > power {
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            // μ → ∞ limit: minimum-norm point of the half-space
            if eps3 > 0.0 && v_norm > 0.0 {
                let w = &problem.halfspace_normal * C64::from(eps3 / (v_norm * v_norm));
                if norm_sqr(&w) <= power * (1.0 + tol_qp) {
                    let objective = problem.objective(&w);
                    return Ok(QpSolution {
                        power_residual: problem.power_residual(&w),
                        radar_residual: problem.radar_residual(&w),
                        w,
                        kkt_case: KktCase::BothActive,
                        objective,
                        radar_multiplier: f64::INFINITY,
                        power_multiplier: f64::INFINITY,
                    });
                }
            }
            return Err(Error::NoConvergence(
                "power multiplier bracket did not close".into(),
            ));
        }
        lo = hi;
        hi *= 2.0;
        hi_eval = dual.eval(hi);
    }

    for _ in 0..MAX_BISECTIONS {
        if power - hi_eval.norm2 <= 1e-14 * power {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let e = dual.eval(mid);
        if e.norm2 > power {
            lo = mid;
        } else {
            hi = mid;
            hi_eval = e;
        }
    }
    Ok(finish(hi_eval, hi))
}

/// [`solve_qp`] with the previous iterate as a fallback: if the solve fails to
/// converge, or lands on a worse objective than a feasible `previous`, the
/// previous point is returned with [`KktCase::Fallback`].
pub fn solve_qp_or_keep(
    problem: &QpProblem,
    tol_qp: f64,
    previous: Option<&CVec>,
) -> Result<QpSolution> {
    let keep = |w: &CVec| QpSolution {
        objective: problem.objective(w),
        power_residual: problem.power_residual(w),
        radar_residual: problem.radar_residual(w),
        w: w.clone(),
        kkt_case: KktCase::Fallback,
        radar_multiplier: 0.0,
        power_multiplier: 0.0,
    };
    let prev_ok = previous.filter(|w| problem.is_feasible(w, 0.0));
    match solve_qp(problem, tol_qp) {
        Ok(sol) => match prev_ok {
            Some(prev) if problem.objective(prev) < sol.objective => Ok(keep(prev)),
            Some(prev) if !problem.is_feasible(&sol.w, tol_qp) => Ok(keep(prev)),
            _ => Ok(sol),
        },
        Err(Error::NoConvergence(msg)) => match prev_ok {
            Some(prev) => {
                log::warn!("beamforming QP failed ({msg}); keeping previous iterate");
                Ok(keep(prev))
            }
            None => Err(Error::NoConvergence(msg)),
        },
        Err(e) => Err(e),
    }
}
