//! Small dense complex helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `a^H b`.
#[inline]
pub fn inner(a: &CVec, b: &CVec) -> Complex64 {
    a.dotc(b)
}

#[inline]
pub fn norm_sqr(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `|a^H b|^2`.
#[inline]
pub fn gain(a: &CVec, b: &CVec) -> f64 {
    inner(a, b).norm_sqr()
}

/// Accumulates `scale * v v^H` into `m`.
pub fn add_outer(m: &mut CMat, v: &CVec, scale: f64) {
    let n = v.len();
    for j in 0..n {
        let vj = v[j].conj() * scale;
        for i in 0..n {
            m[(i, j)] += v[i] * vj;
        }
    }
}

/// Unit-norm copy of `v`; the zero vector stays zero.
pub fn normalized(v: &CVec) -> CVec {
    let n = norm_sqr(v).sqrt();
    if n > 0.0 {
        v.unscale(n)
    } else {
        v.clone()
    }
}

/// Solves `m x = b` for Hermitian positive definite `m`, falling back to LU.
pub fn solve_hpd(m: &CMat, b: &CVec) -> Option<CVec> {
    if let Some(ch) = m.clone().cholesky() {
        return Some(ch.solve(b));
    }
    m.clone().lu().solve(b)
}
