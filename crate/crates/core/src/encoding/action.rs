//! BS action layout `[q_total, q_1..q_K, alpha_1..alpha_K, eta, mu_1..mu_L]`
//! and its decoding into beamformers.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{add_outer, norm_sqr, solve_hpd, CMat, CVec};
use crate::phy::AssociationMap;

pub fn action_dim(num_tu: usize, num_au: usize) -> usize {
    2 * num_tu + num_au + 2
}

/// Linear maps from `[0, 1]` network outputs to the matrix weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActionScales {
    pub alpha_max: f64,
    pub mu_max: f64,
    pub eta_max: f64,
    pub eta_floor: f64,
    /// Raw outputs are clipped to `[raw_floor, 1]`.
    pub raw_floor: f64,
}

impl Default for ActionScales {
    fn default() -> Self {
        Self { alpha_max: 1e12, mu_max: 1e12, eta_max: 1.0, eta_floor: 1e-9, raw_floor: 1e-6 }
    }
}

/// Uniform draw over the action box.
pub fn random_action<R: Rng + ?Sized>(num_tu: usize, num_au: usize, rng: &mut R) -> Vec<f64> {
    (0..action_dim(num_tu, num_au)).map(|_| rng.random::<f64>()).collect()
}

/// Beamformers `(k, w_k)` for every TU served by BS `n`.
///
/// `tu[i]` and `au[l]` are BS `n`'s channels to every TU and AU. Powers are
/// `P_max * q_total * q_k` with `q` renormalised over the served TUs; the
/// direction is `D^-1 h_{n,k}` normalised, with
/// `D = sum_i alpha_i h h^H + sum_l mu_l g g^H + eta I`.
pub fn decode_bs_action(
    raw: &[f64],
    n: usize,
    assoc: &AssociationMap,
    tu: &[CVec],
    au: &[CVec],
    p_max: f64,
    scales: &ActionScales,
) -> Result<Vec<(usize, CVec)>> {
    let (k_count, l_count) = (tu.len(), au.len());
    if raw.len() != action_dim(k_count, l_count) {
        return Err(Error::InvalidArgument(format!(
            "action has {} entries, expected {}",
            raw.len(),
            action_dim(k_count, l_count)
        )));
    }
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("BS action"));
    }
    let a: Vec<f64> = raw.iter().map(|x| x.clamp(scales.raw_floor, 1.0)).collect();
    let served = assoc.served_by(n);
    if served.is_empty() {
        return Ok(Vec::new());
    }
    let q_total = a[0];
    let q = &a[1..=k_count];
    let alpha = &a[1 + k_count..1 + 2 * k_count];
    let eta = (a[1 + 2 * k_count] * scales.eta_max).max(scales.eta_floor);
    let mu = &a[2 + 2 * k_count..];

    let m = tu[0].len();
    let mut d = CMat::identity(m, m) * Complex64::from(eta);
    for (h, &al) in tu.iter().zip(alpha) {
        add_outer(&mut d, h, al * scales.alpha_max);
    }
    for (g, &mu_l) in au.iter().zip(mu) {
        add_outer(&mut d, g, mu_l * scales.mu_max);
    }
    let q_sum: f64 = served.iter().map(|&k| q[k]).sum();
    let mut out = Vec::with_capacity(served.len());
    for &k in &served {
        let p = p_max * q_total * q[k] / q_sum;
        let x = solve_hpd(&d, &tu[k]).ok_or(Error::Singular(n))?;
        let norm = norm_sqr(&x).sqrt();
        let w = if norm > 0.0 && norm.is_finite() { x * Complex64::from(p.sqrt() / norm) } else { CVec::zeros(m) };
        out.push((k, w));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal, stream, Domain};

    fn rand_vec(m: usize, scale: f64, seed: u64) -> CVec {
        let mut rng = stream(seed, Domain::Test, 5, 0);
        CVec::from_fn(m, |_, _| complex_normal(&mut rng) * scale)
    }

    #[test]
    fn identity_matrix_gives_mrt() {
        let tu = vec![rand_vec(4, 1e-5, 1), rand_vec(4, 1e-5, 2)];
        let assoc = AssociationMap::new(vec![0, 1], 2).unwrap();
        let mut raw = vec![0.5; action_dim(2, 0)];
        raw[3] = 0.0;
        raw[4] = 0.0;
        raw[5] = 1.0;
        let scales = ActionScales { alpha_max: 0.0, ..ActionScales::default() };
        let beams = decode_bs_action(&raw, 0, &assoc, &tu, &[], 20.0, &scales).unwrap();
        assert_eq!(beams.len(), 1);
        let (k, w) = &beams[0];
        assert_eq!(*k, 0);
        let dir = crate::linalg::normalized(w);
        let mrt = crate::linalg::normalized(&tu[0]);
        assert!((dir - mrt).norm() < 1e-12);
    }

    #[test]
    fn single_tu_full_power() {
        let tu = vec![rand_vec(2, 1e-5, 3)];
        let assoc = AssociationMap::single(1, 1);
        let raw = vec![1.0, 0.3, 0.7, 0.2];
        let beams = decode_bs_action(&raw, 0, &assoc, &tu, &[], 20.0, &ActionScales::default()).unwrap();
        assert!((norm_sqr(&beams[0].1) - 20.0).abs() < 1e-10);
    }

    #[test]
    fn wrong_length_rejected() {
        let tu = vec![rand_vec(2, 1.0, 4)];
        let assoc = AssociationMap::single(1, 1);
        assert!(decode_bs_action(&[0.5; 3], 0, &assoc, &tu, &[], 1.0, &ActionScales::default()).is_err());
    }
}
