//! Small complex linear-algebra helpers shared by the solver modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CVec = DVector<C64>;
pub type CMat = DMatrix<C64>;

pub const J: C64 = C64 { re: 0.0, im: 1.0 };

/// `xᴴy`.
pub fn hdot(x: &CVec, y: &CVec) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// `xᵀy` (no conjugation).
pub fn tdot(x: &CVec, y: &CVec) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b).sum()
}

pub fn norm_sqr(x: &CVec) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

pub fn max_abs_diff(x: &CVec, y: &CVec) -> f64 {
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

/// Columnwise vectorization `vec(W)`.
pub fn vec_columns(w: &CMat) -> CVec {
    CVec::from_column_slice(w.as_slice())
}

/// Inverse of [`vec_columns`] for an `rows × (len / rows)` matrix.
pub fn unvec_columns(w: &CVec, rows: usize) -> CMat {
    let cols = w.len() / rows;
    CMat::from_column_slice(rows, cols, w.as_slice())
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn hermitian_max_eigenvalue(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn unit_phase(z: C64) -> C64 {
    C64::from_polar(1.0, z.arg())
}
