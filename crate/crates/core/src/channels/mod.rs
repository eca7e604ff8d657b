//! Channel realizations and the composite (direct + reflected) channels.

mod dump;

use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{tdot, CMat, CVec, C64};
use crate::scenario::{path_loss, DistanceRange, ScenarioGeometry, SystemConfig};

pub use dump::{load_channels, save_channels, ChannelDump};

/// One realization of every link in the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// BS → user k, length M.
    pub h_d: Vec<CVec>,
    /// RIS → user k, length N.
    pub h_r: Vec<CVec>,
    /// BS → RIS, N × M.
    pub g: CMat,
    /// BS → target, length M.
    pub h_dt: CVec,
    /// RIS → target, length N.
    pub h_rt: CVec,
}

/// Half-wavelength ULA response, element `i` is `exp(jπ·i·sin θ)`.
pub fn steering_vector(n_elements: usize, angle: f64) -> CVec {
    let s = angle.sin();
    CVec::from_fn(n_elements, |i, _| C64::from_polar(1.0, PI * i as f64 * s))
}

fn sample_distance<R: Rng + ?Sized>(range: DistanceRange, rng: &mut R) -> f64 {
    if range.is_fixed() {
        range.min
    } else {
        rng.random_range(range.min..=range.max)
    }
}

fn rayleigh<R: Rng + ?Sized>(len: usize, variance: f64, rng: &mut R) -> CVec {
    let sd = (variance / 2.0).sqrt();
    CVec::from_fn(len, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * sd, im * sd)
    })
}

/// Draws one channel realization.
///
/// User links are Rayleigh with per-entry variance equal to the link's path
/// loss; the BS–RIS, BS–target and RIS–target links are line-of-sight.
/// Draw order is fixed (target distance, user distances, direct user links,
/// reflected user links) so a seed reproduces the same set.
pub fn generate<R: Rng + ?Sized>(
    config: &SystemConfig,
    geometry: &ScenarioGeometry,
    rng: &mut R,
) -> ChannelSet {
    let (m, n, k) = (config.m, config.n, config.k);

    let d_bs_target = sample_distance(geometry.d_bs_target, rng);
    let d_users: Vec<f64> = (0..k)
        .map(|_| sample_distance(geometry.d_bs_user, rng))
        .collect();

    let h_d = d_users
        .iter()
        .map(|&d| rayleigh(m, path_loss(d, geometry.alpha_bs_user), rng))
        .collect();
    let pl_ris_user = path_loss(geometry.d_ris_user, geometry.alpha_ris_user);
    let h_r = (0..k).map(|_| rayleigh(n, pl_ris_user, rng)).collect();

    let a_ris = steering_vector(n, geometry.theta_ris_from_bs);
    let a_bs = steering_vector(m, geometry.theta_bs_to_ris);
    let g = (&a_ris * a_bs.transpose())
        * C64::from(path_loss(geometry.d_bs_ris, geometry.alpha_bs_ris).sqrt());

    let h_dt = steering_vector(m, geometry.target_azimuth)
        * C64::from(path_loss(d_bs_target, geometry.alpha_bs_target).sqrt());
    let h_rt = steering_vector(n, geometry.target_azimuth)
        * C64::from(path_loss(geometry.d_ris_target, geometry.alpha_ris_target).sqrt());

    ChannelSet {
        h_d,
        h_r,
        g,
        h_dt,
        h_rt,
    }
}

impl ChannelSet {
    pub fn m(&self) -> usize {
        self.h_dt.len()
    }

    pub fn n(&self) -> usize {
        self.h_rt.len()
    }

    pub fn k(&self) -> usize {
        self.h_d.len()
    }

    /// The same realization with every RIS link set to zero.
    pub fn without_ris(&self) -> ChannelSet {
        ChannelSet {
            h_d: self.h_d.clone(),
            h_r: self.h_r.iter().map(|h| CVec::zeros(h.len())).collect(),
            g: CMat::zeros(self.g.nrows(), self.g.ncols()),
            h_dt: self.h_dt.clone(),
            h_rt: CVec::zeros(self.h_rt.len()),
        }
    }

    /// Checks dimensions against a configuration.
    pub fn check_dims(&self, config: &SystemConfig) -> Result<()> {
        let (m, n, k) = (config.m, config.n, config.k);
        let ok = self.m() == m
            && self.n() == n
            && self.k() == k
            && self.h_d.iter().all(|h| h.len() == m)
            && self.h_r.iter().all(|h| h.len() == n)
            && self.g.shape() == (n, m);
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "channel set is M={} N={} K={}, config expects M={m} N={n} K={k}",
                self.m(),
                self.n(),
                self.k()
            )))
        }
    }

    /// `Gᵀ diag(φ) x`.
    fn reflect(&self, phi: &CVec, x: &CVec) -> CVec {
        let scaled = phi.component_mul(x);
        self.g.transpose() * scaled
    }

    /// `h_k(φ) = h_d,k + Gᵀ diag(φ) h_r,k`.
    pub fn composite_user_channel(&self, phi: &CVec, k: usize) -> Result<CVec> {
        if k >= self.k() {
            return Err(Error::Dimension(format!(
                "user index {k} out of range for K = {}",
                self.k()
            )));
        }
        Ok(&self.h_d[k] + self.reflect(phi, &self.h_r[k]))
    }

    /// All composite user channels.
    pub fn composite_user_channels(&self, phi: &CVec) -> Vec<CVec> {
        (0..self.k())
            .map(|k| &self.h_d[k] + self.reflect(phi, &self.h_r[k]))
            .collect()
    }

    /// `h_dt + Gᵀ diag(φ) h_rt`, the one-way target response.
    pub fn target_response(&self, phi: &CVec) -> CVec {
        &self.h_dt + self.reflect(phi, &self.h_rt)
    }

    /// `H_t(φ) = b bᵀ` with `b` the one-way target response. Transposed, not
    /// conjugated.
    pub fn target_channel(&self, phi: &CVec) -> CMat {
        let b = self.target_response(phi);
        &b * b.transpose()
    }

    /// `(I ⊗ H_t(φ)) w`, evaluated blockwise as `b (bᵀ w_j)`.
    pub fn apply_target(&self, phi: &CVec, w: &CVec) -> CVec {
        let b = self.target_response(phi);
        apply_rank_one(&b, w)
    }

    /// Stable fingerprint of every entry, used to log that compared methods see
    /// identical draws.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        let mut feed = |z: &C64| {
            z.re.to_bits().hash(&mut h);
            z.im.to_bits().hash(&mut h);
        };
        self.h_d.iter().flat_map(|v| v.iter()).for_each(&mut feed);
        self.h_r.iter().flat_map(|v| v.iter()).for_each(&mut feed);
        self.g.iter().for_each(&mut feed);
        self.h_dt.iter().for_each(&mut feed);
        self.h_rt.iter().for_each(&mut feed);
        h.finish()
    }
}

/// `(I ⊗ b bᵀ) w` for a stacked vector `w` of `M`-blocks.
pub(crate) fn apply_rank_one(b: &CVec, w: &CVec) -> CVec {
    let m = b.len();
    let mut out = CVec::zeros(w.len());
    for (j, block) in w.as_slice().chunks(m).enumerate() {
        let s: C64 = b.iter().zip(block).map(|(x, y)| x * y).sum();
        for i in 0..m {
            out[j * m + i] = b[i] * s;
        }
    }
    out
}

/// `hᵀ w_j` for every column `j`.
pub(crate) fn column_responses(h: &CVec, w: &CMat) -> Vec<C64> {
    w.column_iter()
        .map(|c| tdot(h, &c.clone_owned()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, J};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_vec(len: usize, rng: &mut ChaCha8Rng) -> CVec {
        rayleigh(len, 2.0, rng)
    }

    fn sample_set() -> ChannelSet {
        let cfg = SystemConfig::desk_default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        generate(&cfg, &ScenarioGeometry::default(), &mut rng)
    }

    #[test]
    fn steering_examples() {
        let v = steering_vector(4, 0.0);
        assert!(v.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
        let v = steering_vector(2, PI / 2.0);
        assert!((v[1] - C64::new(-1.0, 0.0)).norm() < 1e-15);
        let v = steering_vector(3, PI / 6.0);
        assert!((v[1] - J).norm() < 1e-15);
        assert!((v[2] - C64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn same_seed_same_channels() {
        assert_eq!(sample_set(), sample_set());
        assert_eq!(sample_set().fingerprint(), sample_set().fingerprint());
    }

    #[test]
    fn dims_match_config() {
        let cs = sample_set();
        cs.check_dims(&SystemConfig::desk_default()).unwrap();
        let mut cfg = SystemConfig::desk_default();
        cfg.n = 3;
        assert!(cs.check_dims(&cfg).is_err());
    }

    #[test]
    fn los_bs_ris_energy() {
        let cs = sample_set();
        let geo = ScenarioGeometry::default();
        let energy: f64 = cs.g.iter().map(|z| z.norm_sqr()).sum();
        let expect = 16.0 * 4.0 * path_loss(geo.d_bs_ris, geo.alpha_bs_ris);
        assert_relative_eq!(energy, expect, max_relative = 1e-12);
        // rank one
        let sv = cs.g.clone().singular_values();
        assert!(sv[1] < 1e-12 * sv[0]);
    }

    #[test]
    fn direct_link_variance() {
        let mut cfg = SystemConfig::desk_default();
        cfg.set_users(1);
        let mut geo = ScenarioGeometry::default();
        geo.d_bs_user = DistanceRange::fixed(54.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 10_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let cs = generate(&cfg, &geo, &mut rng);
            acc += crate::linalg::norm_sqr(&cs.h_d[0]) / cfg.m as f64;
        }
        let est = acc / trials as f64;
        let pl = path_loss(54.0, 3.5);
        assert!((est / pl - 1.0).abs() < 0.05, "{est} vs {pl}");
    }

    #[test]
    fn composite_channel_cases() {
        let cs = sample_set();
        let zero = CVec::zeros(cs.n());
        assert_eq!(cs.composite_user_channel(&zero, 1).unwrap(), cs.h_d[1]);
        assert!(cs.composite_user_channel(&zero, 2).is_err());

        let scalar = ChannelSet {
            h_d: vec![CVec::from_vec(vec![C64::new(1.0, 0.0)])],
            h_r: vec![CVec::from_vec(vec![C64::new(1.0, 0.0)])],
            g: CMat::from_element(1, 1, C64::new(1.0, 0.0)),
            h_dt: CVec::from_vec(vec![C64::new(1.0, 0.0)]),
            h_rt: CVec::from_vec(vec![C64::new(1.0, 0.0)]),
        };
        let h = scalar
            .composite_user_channel(&CVec::from_vec(vec![J]), 0)
            .unwrap();
        assert_eq!(h[0], C64::new(1.0, 1.0));
    }

    #[test]
    fn composite_channel_matches_loop() {
        let cs = sample_set();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = random_vec(cs.n(), &mut rng);
        for k in 0..cs.k() {
            let h = cs.composite_user_channel(&phi, k).unwrap();
            for m in 0..cs.m() {
                let mut acc = cs.h_d[k][m];
                for n in 0..cs.n() {
                    acc += cs.g[(n, m)] * phi[n] * cs.h_r[k][n];
                }
                assert!((h[m] - acc).norm() < 1e-12 * (1.0 + acc.norm()));
            }
        }
    }

    #[test]
    fn composite_channel_is_affine() {
        let cs = sample_set();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p1 = random_vec(cs.n(), &mut rng);
        let p2 = random_vec(cs.n(), &mut rng);
        let sum = &p1 + &p2;
        let lhs = cs.composite_user_channel(&sum, 0).unwrap() + &cs.h_d[0];
        let rhs = cs.composite_user_channel(&p1, 0).unwrap() + cs.composite_user_channel(&p2, 0).unwrap();
        assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn target_channel_structure() {
        let cs = sample_set();
        let zero = CVec::zeros(cs.n());
        let ht0 = cs.target_channel(&zero);
        assert_eq!(ht0, &cs.h_dt * cs.h_dt.transpose());

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let phi = random_vec(cs.n(), &mut rng);
        let ht = cs.target_channel(&phi);
        let scale = ht.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((&ht - ht.transpose()).iter().all(|z| z.norm() <= 1e-12 * scale));
        let sv = ht.clone().singular_values();
        assert!(sv[1] <= 1e-10 * sv[0]);

        // four-term expansion hdt hdtᵀ + GᵀΦhrt hdtᵀ + hdt hrtᵀΦG + GᵀΦhrt hrtᵀΦG
        let phi_m = CMat::from_diagonal(&phi);
        let gt = cs.g.transpose();
        let x = &gt * &phi_m * &cs.h_rt;
        let y = cs.h_rt.transpose() * &phi_m * &cs.g;
        let expansion = &cs.h_dt * cs.h_dt.transpose()
            + &x * cs.h_dt.transpose()
            + &cs.h_dt * &y
            + &x * &y;
        assert!((&ht - expansion).iter().all(|z| z.norm() <= 1e-12 * scale));
    }
}
