//! Reflection-coefficient subproblem.
//!
//! The radar response is expanded explicitly in `φ`:
//!
//! ```text
//! (I⊗H_t(φ))w = (I⊗h_dt h_dtᵀ)w + Fφ + L vec(φφᵀ)
//! F = Wᵀh_dt ⊗ A + WᵀA ⊗ h_dt,   L = WᵀA ⊗ A,   A = Gᵀ diag(h_rt)
//! ```
//!
//! The quadratic part `uᴴL vec(φφᵀ) = φᵀL̃φ` is non-concave; its real
//! embedding `φ̄ᵀL̄φ̄ = −Re{φᵀL̃φ}` is majorized around the previous unit-modulus
//! point `φ̂` with curvature `λ = λmax(L̄ + L̄ᵀ)`, which turns the radar
//! constraint into the half-space `Re{ũᴴφ} ≤ ε4`. The resulting convex-plus-
//! unit-modulus problem is solved by ADMM in [`admm`].

pub mod admm;

use nalgebra::{DMatrix, DVector};

use crate::channels::ChannelSet;
use crate::linalg::{hdot, CMat, CVec, C64, J};
use crate::scenario::SurrogateSign;

pub use admm::{
    solve_phi_step, solve_reflection, update_mu, update_varphi, AdmmState, ReflectionOutcome,
};

/// `A = Gᵀ diag(h_rt)`, `M × N`.
fn reflect_matrix(cs: &ChannelSet) -> CMat {
    let mut a = cs.g.transpose();
    for (n, mut col) in a.column_iter_mut().enumerate() {
        col *= cs.h_rt[n];
    }
    a
}

/// `F = Wᵀh_dt ⊗ A + WᵀA ⊗ h_dt`, `M(K+M) × N`.
pub fn linear_target_matrix(cs: &ChannelSet, w: &CMat) -> CMat {
    let (m, n) = (cs.m(), cs.n());
    let a = reflect_matrix(cs);
    let wt_a = w.transpose() * &a;
    let mut f = CMat::zeros(m * w.ncols(), n);
    for j in 0..w.ncols() {
        let s: C64 = w.column(j).iter().zip(cs.h_dt.iter()).map(|(x, y)| x * y).sum();
        let block = &a * s + &cs.h_dt * wt_a.row(j);
        f.view_mut((j * m, 0), (m, n)).copy_from(&block);
    }
    f
}

/// Materialized `L = WᵀA ⊗ A`, `M(K+M) × N²`. Only sensible for small `N`.
pub fn quadratic_target_matrix(cs: &ChannelSet, w: &CMat) -> CMat {
    let a = reflect_matrix(cs);
    (w.transpose() * &a).kronecker(&a)
}

/// `(I⊗h_dt h_dtᵀ)w`.
pub fn direct_target_response(cs: &ChannelSet, w: &CMat) -> CVec {
    crate::channels::apply_rank_one(&cs.h_dt, &crate::linalg::vec_columns(w))
}

/// `(I⊗h_dt h_dtᵀ)w + Fφ + L vec(φφᵀ)`, with the last term evaluated blockwise
/// as `(w_jᵀAφ)·Aφ`.
pub fn expand_target_response(cs: &ChannelSet, w: &CMat, phi: &CVec) -> CVec {
    let m = cs.m();
    let a_phi = reflect_matrix(cs) * phi;
    let quad: CVec = {
        let mut out = CVec::zeros(m * w.ncols());
        for j in 0..w.ncols() {
            let s: C64 = w.column(j).iter().zip(a_phi.iter()).map(|(x, y)| x * y).sum();
            out.rows_mut(j * m, m).copy_from(&(&a_phi * s));
        }
        out
    };
    direct_target_response(cs, w) + linear_target_matrix(cs, w) * phi + quad
}

/// `[Re φ; Im φ]`.
pub fn realify(phi: &CVec) -> DVector<f64> {
    let n = phi.len();
    DVector::from_fn(2 * n, |i, _| if i < n { phi[i].re } else { phi[i - n].im })
}

/// Inverse of [`realify`], i.e. `U x` with `U = [I  jI]`.
pub fn complexify(x: &DVector<f64>) -> CVec {
    let n = x.len() / 2;
    CVec::from_fn(n, |i, _| C64::new(x[i], x[i + n]))
}

/// `L̄ = [[−Re L̃, Im L̃], [Im L̃, Re L̃]]`, so that `φ̄ᵀL̄φ̄ = −Re{φᵀL̃φ}`.
pub fn real_embedding(l_tilde: &CMat) -> DMatrix<f64> {
    let n = l_tilde.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = l_tilde[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) => -z.re,
            (false, false) => z.re,
            _ => z.im,
        }
    })
}

/// Majorizer data for one outer iteration.
#[derive(Debug, Clone)]
pub struct SurrogateData {
    /// `F`, `M(K+M) × N`.
    pub f_mat: CMat,
    /// `L̃`, the `N × N` form with `uᴴL vec(φφᵀ) = φᵀL̃φ`.
    pub l_tilde: CMat,
    /// Real embedding `L̄`, `2N × 2N`.
    pub l_bar: DMatrix<f64>,
    /// `λmax(L̄ + L̄ᵀ)`.
    pub lambda_max: f64,
    /// Expansion point `φ̂`.
    pub phi_hat: CVec,
    /// Linear coefficient of the linearized constraint.
    pub u_tilde: CVec,
    pub eps4: f64,
    /// `Re{uᴴ(I⊗h_dt h_dtᵀ)w}`.
    pub const_term: f64,
    pub eps3: f64,
    pub sign: SurrogateSign,
}

impl SurrogateData {
    /// Surrogate carrying only the linear constraint, for tests of the ADMM
    /// step in isolation.
    pub fn linear_only(u_tilde: CVec, eps4: f64, sign: SurrogateSign) -> Self {
        let n = u_tilde.len();
        SurrogateData {
            f_mat: CMat::zeros(0, n),
            l_tilde: CMat::zeros(n, n),
            l_bar: DMatrix::zeros(2 * n, 2 * n),
            lambda_max: 0.0,
            phi_hat: CVec::from_element(n, C64::new(1.0, 0.0)),
            u_tilde,
            eps4,
            const_term: 0.0,
            eps3: 0.0,
            sign,
        }
    }

    /// `φ̄ᵀL̄φ̄`.
    pub fn quadratic(&self, phi: &CVec) -> f64 {
        let x = realify(phi);
        x.dot(&(&self.l_bar * &x))
    }

    /// Upper bound on [`Self::quadratic`], tight at `φ̂`.
    pub fn majorizer(&self, phi: &CVec) -> f64 {
        let x = realify(phi);
        let x_hat = realify(&self.phi_hat);
        let d = &x - &x_hat;
        let s = &self.l_bar + self.l_bar.transpose();
        x_hat.dot(&(&self.l_bar * &x_hat)) + x_hat.dot(&(&s * &d)) + 0.5 * self.lambda_max * d.dot(&d)
    }

    /// Closed form of the majorizer on `‖φ̄‖² = N`:
    /// `Re{qφ} − φ̂ᵀL̄φ̂ + λN`.
    pub fn majorizer_unit_modulus(&self, phi: &CVec) -> f64 {
        let q = self.gradient_row();
        let x_hat = realify(&self.phi_hat);
        let n = self.phi_hat.len() as f64;
        q.iter().zip(phi.iter()).map(|(a, b)| a * b).sum::<C64>().re
            - x_hat.dot(&(&self.l_bar * &x_hat))
            + self.lambda_max * n
    }

    /// `q` with `Re{qφ} = φ̂̄ᵀ(L̄ + L̄ᵀ − λI)φ̄`.
    fn gradient_row(&self) -> CVec {
        row_for(&self.l_bar, self.lambda_max, &self.phi_hat)
    }

    /// The constraint as `Re{nᴴφ} ≤ offset`.
    pub fn halfspace(&self) -> (CVec, f64) {
        match self.sign {
            SurrogateSign::Derived => (self.u_tilde.clone(), self.eps4),
            SurrogateSign::Reversed => (-self.u_tilde.clone(), -self.eps4),
        }
    }

    /// Whether the linearized constraint holds at `φ`.
    pub fn constraint_holds(&self, phi: &CVec, tol: f64) -> bool {
        let (normal, offset) = self.halfspace();
        hdot(&normal, phi).re <= offset + tol
    }
}

fn row_for(l_bar: &DMatrix<f64>, lambda: f64, phi_hat: &CVec) -> CVec {
    let n = phi_hat.len();
    let x_hat = realify(phi_hat);
    let mut s = l_bar + l_bar.transpose();
    for i in 0..2 * n {
        s[(i, i)] -= lambda;
    }
    let p = s.transpose() * x_hat;
    // p φ̄ = Re{(p_re − j p_im) φ}
    CVec::from_fn(n, |i, _| C64::new(p[i], 0.0) - J * p[i + n])
}

/// Builds `F`, `L̃`, `L̄`, `λ`, `ũ` and `ε4` around the unit-modulus point
/// `phi_hat`.
pub fn build_surrogate(
    cs: &ChannelSet,
    w: &CMat,
    u: &CVec,
    phi_hat: &CVec,
    eps3: f64,
    sign: SurrogateSign,
) -> SurrogateData {
    let m = cs.m();
    let a = reflect_matrix(cs);
    let f_mat = linear_target_matrix(cs, w);

    // L̃ = Aᵀ W Uᴴ A with U the M × (K+M) reshape of u
    let u_mat = CMat::from_column_slice(m, w.ncols(), u.as_slice());
    let l_tilde = a.transpose() * w * u_mat.adjoint() * &a;
    let l_bar = real_embedding(&l_tilde);
    let sym = &l_bar + l_bar.transpose();
    let lambda_max = if sym.nrows() == 0 {
        0.0
    } else {
        sym.symmetric_eigenvalues().max()
    };

    let q = row_for(&l_bar, lambda_max, phi_hat);
    // ũᴴ = −uᴴF + q
    let u_tilde = -(f_mat.adjoint() * u) + q.map(|z| z.conj());
    let x_hat = realify(phi_hat);
    let const_term = hdot(u, &direct_target_response(cs, w)).re;
    let n = phi_hat.len() as f64;
    let eps4 = -eps3 + x_hat.dot(&(&l_bar * &x_hat)) + const_term - lambda_max * n;

    SurrogateData {
        f_mat,
        l_tilde,
        l_bar,
        lambda_max,
        phi_hat: phi_hat.clone(),
        u_tilde,
        eps4,
        const_term,
        eps3,
        sign,
    }
}
