use std::f64::consts::PI;

use num_complex::Complex64;

use crate::linalg::{CMat, CVec};

/// DFT-style codebook. Column `c` (0-based) is
/// `(1/sqrt M) [1, e^{j2 pi c/C}, ..., e^{j2 pi (M-1) c/C}]^T`.
#[derive(Clone, Debug)]
pub struct Codebook {
    f: CMat,
    nc: usize,
}

/// Top-`N_c` codebook coefficients, strongest first.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressedChannel {
    pub index: Vec<usize>,
    pub coeff: Vec<Complex64>,
}

impl CompressedChannel {
    pub fn zeros(nc: usize) -> Self {
        Self { index: (0..nc).collect(), coeff: vec![Complex64::new(0.0, 0.0); nc] }
    }
}

impl Codebook {
    pub fn new(m: usize, size: usize, nc: usize) -> Self {
        assert!(nc <= size, "compression factor {nc} exceeds codebook size {size}");
        let scale = 1.0 / (m as f64).sqrt();
        let f = CMat::from_fn(m, size, |i, c| Complex64::from_polar(scale, 2.0 * PI * (i * c) as f64 / size as f64));
        Self { f, nc }
    }

    pub fn size(&self) -> usize {
        self.f.ncols()
    }

    pub fn nc(&self) -> usize {
        self.nc
    }

    pub fn column(&self, c: usize) -> CVec {
        self.f.column(c).into_owned()
    }

    /// `d = F^H h` truncated to the `N_c` largest magnitudes; ties keep the
    /// lower index first.
    pub fn compress(&self, h: &CVec) -> CompressedChannel {
        let d = self.f.adjoint() * h;
        let mut order: Vec<usize> = (0..d.len()).collect();
        order.sort_by(|&a, &b| d[b].norm_sqr().total_cmp(&d[a].norm_sqr()).then(a.cmp(&b)));
        order.truncate(self.nc);
        let coeff = order.iter().map(|&c| d[c]).collect();
        CompressedChannel { index: order, coeff }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm_sqr;

    #[test]
    fn columns_are_unit_norm() {
        let cb = Codebook::new(16, 128, 4);
        for c in 0..128 {
            assert!((norm_sqr(&cb.column(c)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn codeword_compresses_to_itself() {
        let cb = Codebook::new(16, 128, 4);
        let out = cb.compress(&cb.column(37));
        assert_eq!(out.index[0], 37);
        assert!((out.coeff[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_channel_uses_tie_order() {
        let cb = Codebook::new(4, 128, 4);
        let out = cb.compress(&CVec::zeros(4));
        assert_eq!(out.index, vec![0, 1, 2, 3]);
    }
}
