//! Fractional-programming reformulation of the sum-rate.
//!
//! With auxiliaries `r` (Lagrangian dual transform) and `c` (quadratic
//! transform) the sum-rate is replaced by
//!
//! ```text
//! f(w, φ, r, c) = Σ log2(1+r_k) − κ Σ r_k − κ Σ |c_k|²σ_k²
//!               + κ Σ 2√(1+r_k) Re{c_k* h_kᵀ(φ) w_k} − κ Σ_k |c_k|² Σ_j |h_kᵀ(φ) w_j|²
//! ```
//!
//! with `κ = 1/ln 2`. The transform is exact in nats; scaling every term but
//! the logarithm by `κ` keeps `f` tight against the rate in bits at the
//! closed-form `r`, `c` and a lower bound on it everywhere else. Each block is
//! concave.
//! [`assemble_compact`] rewrites `f` as an explicit quadratic in `w`
//! (`Re{aᴴw} − ‖Bw‖² + ε1`) and in `φ` (`Re{gᴴφ} − φᴴDφ + ε2`).

use crate::channels::{column_responses, ChannelSet};
use crate::linalg::{vec_columns, CMat, CVec, C64};

/// `1/ln 2`, converting the nat-valued transform terms to bits.
pub const BITS_PER_NAT: f64 = std::f64::consts::LOG2_E;

/// FP auxiliaries: `r_k ≥ 0` and complex `c_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryState {
    pub r: Vec<f64>,
    pub c: Vec<C64>,
}

/// `h_kᵀ(φ) w_j` for every user `k` (rows) and column `j`.
pub fn response_table(cs: &ChannelSet, phi: &CVec, w: &CMat) -> Vec<Vec<C64>> {
    cs.composite_user_channels(phi)
        .iter()
        .map(|h| column_responses(h, w))
        .collect()
}

fn sinr_from_row(row: &[C64], k: usize, noise: f64) -> f64 {
    let signal = row[k].norm_sqr();
    let interference: f64 = row
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    signal / (interference + noise)
}

/// SINR of user `k`. The radar columns of `W` count as interference.
pub fn sinr(cs: &ChannelSet, phi: &CVec, w: &CMat, noise: &[f64], k: usize) -> f64 {
    let h = &cs.h_d[k] + {
        let scaled = phi.component_mul(&cs.h_r[k]);
        cs.g.transpose() * scaled
    };
    sinr_from_row(&column_responses(&h, w), k, noise[k])
}

/// `Σ_k log2(1 + SINR_k)` in bit/s/Hz.
pub fn sum_rate(cs: &ChannelSet, phi: &CVec, w: &CMat, noise: &[f64]) -> f64 {
    update_r(cs, phi, w, noise)
        .iter()
        .map(|s| (1.0 + s).log2())
        .sum()
}

/// Optimal `r`, which coincides with the per-user SINR.
pub fn update_r(cs: &ChannelSet, phi: &CVec, w: &CMat, noise: &[f64]) -> Vec<f64> {
    response_table(cs, phi, w)
        .iter()
        .enumerate()
        .map(|(k, row)| sinr_from_row(row, k, noise[k]))
        .collect()
}

/// Optimal `c` for fixed `r`: `√(1+r_k) h_kᵀw_k / (Σ_j |h_kᵀw_j|² + σ_k²)`,
/// the sum running over every column including `k`.
pub fn update_c(cs: &ChannelSet, phi: &CVec, w: &CMat, r: &[f64], noise: &[f64]) -> Vec<C64> {
    response_table(cs, phi, w)
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let total: f64 = row.iter().map(|z| z.norm_sqr()).sum::<f64>() + noise[k];
            row[k] * ((1.0 + r[k]).sqrt() / total)
        })
        .collect()
}

pub fn update_aux(cs: &ChannelSet, phi: &CVec, w: &CMat, noise: &[f64]) -> AuxiliaryState {
    let r = update_r(cs, phi, w, noise);
    let c = update_c(cs, phi, w, &r, noise);
    AuxiliaryState { r, c }
}

/// Terms of `f` that do not depend on `w` or `φ`.
fn eps1(aux: &AuxiliaryState, noise: &[f64]) -> f64 {
    aux.r
        .iter()
        .zip(&aux.c)
        .zip(noise)
        .map(|((r, c), s)| (1.0 + r).log2() - BITS_PER_NAT * (r + c.norm_sqr() * s))
        .sum()
}

/// Evaluates `f(w, φ, r, c)` term by term.
pub fn transformed_objective(
    cs: &ChannelSet,
    phi: &CVec,
    w: &CMat,
    aux: &AuxiliaryState,
    noise: &[f64],
) -> f64 {
    let table = response_table(cs, phi, w);
    let mut f = eps1(aux, noise);
    for (k, row) in table.iter().enumerate() {
        let (r, c) = (aux.r[k], aux.c[k]);
        f += BITS_PER_NAT * 2.0 * (1.0 + r).sqrt() * (c.conj() * row[k]).re;
        f -= BITS_PER_NAT * c.norm_sqr() * row.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    f
}

/// The explicit quadratic forms of `f` in `w` and in `φ`.
#[derive(Debug, Clone)]
pub struct CompactForms {
    /// Linear coefficient in `w`, length `M(K+M)`.
    pub a: CVec,
    /// `BᴴB` is block diagonal with `K+M` copies of this `M × M` block
    /// `Σ_k |c_k|² h_k* h_kᵀ`.
    pub gram_block: CMat,
    pub eps1: f64,
    /// Linear coefficient in `φ`, length `N`.
    pub g: CVec,
    /// Hermitian PSD curvature in `φ`, `N × N`.
    pub d: CMat,
    pub eps2: f64,
}

impl CompactForms {
    pub fn streams(&self) -> usize {
        self.a.len() / self.gram_block.nrows().max(1)
    }

    /// `Σ_j w_jᴴ Q w_j`, equal to `‖Bw‖²`.
    pub fn quadratic_w(&self, w: &CVec) -> f64 {
        let m = self.gram_block.nrows();
        w.as_slice()
            .chunks(m)
            .map(|blk| {
                let x = CVec::from_column_slice(blk);
                crate::linalg::hdot(&x, &(&self.gram_block * &x)).re
            })
            .sum()
    }

    /// `Re{aᴴw} − ‖Bw‖² + ε1`.
    pub fn objective_w(&self, w: &CVec) -> f64 {
        crate::linalg::hdot(&self.a, w).re - self.quadratic_w(w) + self.eps1
    }

    /// `Re{gᴴφ} − φᴴDφ + ε2`.
    pub fn objective_phi(&self, phi: &CVec) -> f64 {
        crate::linalg::hdot(&self.g, phi).re
            - crate::linalg::hdot(phi, &(&self.d * phi)).re
            + self.eps2
    }

    /// Dense `BᴴB`, for tests and small problems.
    pub fn gram_dense(&self) -> CMat {
        let m = self.gram_block.nrows();
        let j = self.streams();
        let mut out = CMat::zeros(m * j, m * j);
        for b in 0..j {
            out.view_mut((b * m, b * m), (m, m)).copy_from(&self.gram_block);
        }
        out
    }
}

/// Builds `a`, `BᴴB`, `ε1`, `g`, `D` and `ε2` at the current iterates.
pub fn assemble_compact(
    cs: &ChannelSet,
    phi: &CVec,
    w: &CMat,
    aux: &AuxiliaryState,
    noise: &[f64],
) -> CompactForms {
    let (m, n, k_users) = (cs.m(), cs.n(), cs.k());
    let streams = w.ncols();
    let h = cs.composite_user_channels(phi);

    let mut a = CVec::zeros(m * streams);
    let mut gram_block = CMat::zeros(m, m);
    for k in 0..k_users {
        let (r, c) = (aux.r[k], aux.c[k]);
        let scale = c * (2.0 * (1.0 + r).sqrt());
        for i in 0..m {
            a[k * m + i] = scale * h[k][i].conj();
        }
        let hc = h[k].map(|z| z.conj());
        gram_block += (&hc * h[k].transpose()) * C64::from(c.norm_sqr());
    }
    let e1 = eps1(aux, noise);

    // h_kᵀ(φ) w_j = d_kj + e_kjᵀ φ with d_kj = h_d,kᵀ w_j and e_kj = (G w_j) ∘ h_r,k
    let gw: Vec<CVec> = w.column_iter().map(|col| &cs.g * col).collect();
    let mut g = CVec::zeros(n);
    let mut d = CMat::zeros(n, n);
    let mut e2 = 0.0;
    for k in 0..k_users {
        let (r, c) = (aux.r[k], aux.c[k]);
        let c2 = c.norm_sqr();
        let direct = column_responses(&cs.h_d[k], w);
        for j in 0..streams {
            let e = gw[j].component_mul(&cs.h_r[k]);
            let ec = e.map(|z| z.conj());
            if j == k {
                g += &ec * (c * (2.0 * (1.0 + r).sqrt()));
            }
            g -= &ec * (direct[j] * (2.0 * c2));
            d += (&ec * e.transpose()) * C64::from(c2);
            e2 -= c2 * direct[j].norm_sqr();
        }
        e2 += 2.0 * (1.0 + r).sqrt() * (c.conj() * direct[k]).re;
    }
    // symmetrize away rounding so downstream eigen-solves see an exact Hermitian
    let d = (&d + d.adjoint()) * C64::from(0.5 * BITS_PER_NAT);

    let kappa = C64::from(BITS_PER_NAT);
    CompactForms {
        a: a * kappa,
        gram_block: gram_block * kappa,
        eps1: e1,
        g: g * kappa,
        d,
        eps2: e1 + BITS_PER_NAT * e2,
    }
}

/// The stacked `B` matrix with rows `b_{k,j}ᵀ = √κ |c_k| (T_jᵀ h_k)ᵀ`, ordered
/// `(k, j)` with `j` fastest.
pub fn b_matrix(cs: &ChannelSet, phi: &CVec, streams: usize, aux: &AuxiliaryState) -> CMat {
    let m = cs.m();
    let h = cs.composite_user_channels(phi);
    let mut b = CMat::zeros(cs.k() * streams, m * streams);
    for (k, hk) in h.iter().enumerate() {
        let s = aux.c[k].norm() * BITS_PER_NAT.sqrt();
        for j in 0..streams {
            for i in 0..m {
                b[(k * streams + j, j * m + i)] = hk[i] * s;
            }
        }
    }
    b
}

/// `vec(W)` convenience re-export for callers working with stacked vectors.
pub fn stack(w: &CMat) -> CVec {
    vec_columns(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::generate;
    use crate::linalg::hdot;
    use crate::scenario::{ScenarioGeometry, SystemConfig};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar_set(h: f64) -> ChannelSet {
        let one = |x: f64| CVec::from_vec(vec![C64::new(x, 0.0)]);
        ChannelSet {
            h_d: vec![one(h)],
            h_r: vec![one(0.0)],
            g: CMat::zeros(1, 1),
            h_dt: one(1.0),
            h_rt: one(0.0),
        }
    }

    pub(crate) fn random_instance(seed: u64) -> (ChannelSet, CVec, CMat, Vec<f64>) {
        let cfg = SystemConfig::desk_default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cs = generate(&cfg, &ScenarioGeometry::default(), &mut rng);
        let phi = CVec::from_fn(cs.n(), |_, _| C64::from_polar(1.0, rng.random_range(0.0..6.283)));
        let w = CMat::from_fn(cfg.m, cfg.streams(), |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        (cs, phi, w, cfg.sigma_k2.clone())
    }

    #[test]
    fn scalar_sinr_and_updates() {
        let cs = scalar_set(1.0);
        let phi = CVec::zeros(1);
        let w = CMat::from_element(1, 1, C64::new(2.0, 0.0));
        let noise = [1.0];
        assert_relative_eq!(sinr(&cs, &phi, &w, &noise, 0), 4.0);
        let r = update_r(&cs, &phi, &w, &noise);
        assert_relative_eq!(r[0], 4.0);
        let c = update_c(&cs, &phi, &w, &r, &noise);
        assert_relative_eq!(c[0].re, 5f64.sqrt() * 2.0 / 5.0, epsilon = 1e-15);
        assert_relative_eq!(c[0].re, 0.894427, epsilon = 1e-6);
    }

    #[test]
    fn zero_channel_gives_zero() {
        let cs = scalar_set(0.0);
        let phi = CVec::zeros(1);
        let w = CMat::from_element(1, 1, C64::new(2.0, 0.0));
        assert_eq!(update_r(&cs, &phi, &w, &[1.0]), vec![0.0]);
        assert_eq!(update_c(&cs, &phi, &w, &[0.0], &[1.0])[0], C64::new(0.0, 0.0));
        assert_eq!(sum_rate(&cs, &phi, &w, &[1.0]), 0.0);
    }

    #[test]
    fn sinr_matches_loop() {
        let (cs, phi, w, noise) = random_instance(21);
        for k in 0..cs.k() {
            let h: Vec<C64> = (0..cs.m())
                .map(|m| {
                    let mut acc = cs.h_d[k][m];
                    for n in 0..cs.n() {
                        acc += cs.g[(n, m)] * phi[n] * cs.h_r[k][n];
                    }
                    acc
                })
                .collect();
            let mut num = 0.0;
            let mut den = noise[k];
            for j in 0..w.ncols() {
                let mut s = C64::new(0.0, 0.0);
                for m in 0..cs.m() {
                    s += h[m] * w[(m, j)];
                }
                if j == k {
                    num = s.norm_sqr();
                } else {
                    den += s.norm_sqr();
                }
            }
            let expect = num / den;
            assert_relative_eq!(sinr(&cs, &phi, &w, &noise, k), expect, max_relative = 1e-12);
            assert_relative_eq!(update_r(&cs, &phi, &w, &noise)[k], expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_w_leaves_constant_terms() {
        let (cs, phi, w, noise) = random_instance(4);
        let aux = update_aux(&cs, &phi, &w, &noise);
        let zero = CMat::zeros(w.nrows(), w.ncols());
        let expect: f64 = (0..cs.k())
            .map(|k| (1.0 + aux.r[k]).log2() - (aux.r[k] + aux.c[k].norm_sqr() * noise[k]) / std::f64::consts::LN_2)
            .sum();
        assert_relative_eq!(
            transformed_objective(&cs, &phi, &zero, &aux, &noise),
            expect,
            max_relative = 1e-12
        );
    }

    #[test]
    fn c_update_is_local_maximum() {
        let (cs, phi, w, noise) = random_instance(5);
        let aux = update_aux(&cs, &phi, &w, &noise);
        let base = transformed_objective(&cs, &phi, &w, &aux, &noise);
        for k in 0..cs.k() {
            let delta = 1e-3 * aux.c[k].norm().max(1.0);
            for dz in [C64::new(delta, 0.0), C64::new(-delta, 0.0), C64::new(0.0, delta), C64::new(0.0, -delta)] {
                let mut p = aux.clone();
                p.c[k] += dz;
                assert!(transformed_objective(&cs, &phi, &w, &p, &noise) < base);
            }
        }
    }

    #[test]
    fn perturbing_r_decreases_f() {
        let (cs, phi, w, noise) = random_instance(6);
        let aux = update_aux(&cs, &phi, &w, &noise);
        let base = transformed_objective(&cs, &phi, &w, &aux, &noise);
        for k in 0..cs.k() {
            for d in [-0.05, 0.05] {
                let mut p = aux.clone();
                p.r[k] *= 1.0 + d;
                assert!(transformed_objective(&cs, &phi, &w, &p, &noise) < base);
            }
        }
    }

    #[test]
    fn compact_forms_match_objective() {
        for seed in 0..5 {
            let (cs, phi, w, noise) = random_instance(100 + seed);
            let aux = update_aux(&cs, &phi, &w, &noise);
            // move away from the tight point so the check is not trivial
            let mut aux = aux;
            aux.r.iter_mut().for_each(|r| *r *= 0.7);
            let f = transformed_objective(&cs, &phi, &w, &aux, &noise);
            let cf = assemble_compact(&cs, &phi, &w, &aux, &noise);
            let wv = stack(&w);
            let tol = 1e-9 * (1.0 + f.abs());
            assert!((cf.objective_w(&wv) - f).abs() <= tol);
            assert!((cf.objective_phi(&phi) - f).abs() <= tol);

            let b = b_matrix(&cs, &phi, w.ncols(), &aux);
            let bw = &b * &wv;
            assert!((hdot(&bw, &bw).re - cf.quadratic_w(&wv)).abs() <= 1e-9 * (1.0 + f.abs()));
            let gram = b.adjoint() * &b;
            assert!((gram - cf.gram_dense()).iter().all(|z| z.norm() < 1e-9));

            let zero = CVec::zeros(cs.n());
            let f0 = transformed_objective(&cs, &zero, &w, &aux, &noise);
            let cf0 = assemble_compact(&cs, &phi, &w, &aux, &noise);
            assert!((cf0.eps2 - f0).abs() <= 1e-9 * (1.0 + f0.abs()));

            // D Hermitian PSD
            let herm = (&cf.d - cf.d.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(herm <= 1e-10);
            let min_eig = cf.d.clone().symmetric_eigenvalues().min();
            assert!(min_eig >= -1e-9);
        }
    }
}
