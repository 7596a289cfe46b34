//! SINR, rates, interference decompositions and power accounting.
//!
//! Channels are indexed `[bs][user]`. All powers are in watts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gain, norm_sqr, CVec};

/// Denominator floor used whenever a power sum could be exactly zero.
pub const POWER_FLOOR: f64 = 1e-30;

/// Serving BS per TU.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationMap {
    varrho: Vec<usize>,
    num_bs: usize,
}

impl AssociationMap {
    pub fn new(varrho: Vec<usize>, num_bs: usize) -> Result<Self> {
        if let Some((k, &n)) = varrho.iter().enumerate().find(|(_, &n)| n >= num_bs) {
            return Err(Error::InvalidArgument(format!("TU {k} assigned to BS {n}, only {num_bs} BSs")));
        }
        Ok(Self { varrho, num_bs })
    }

    /// Every TU on BS 0.
    pub fn single(num_tu: usize, num_bs: usize) -> Self {
        Self { varrho: vec![0; num_tu], num_bs }
    }

    pub fn num_tu(&self) -> usize {
        self.varrho.len()
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn serving(&self, k: usize) -> usize {
        self.varrho[k]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.varrho
    }

    pub fn chi(&self, n: usize, k: usize) -> bool {
        self.varrho[k] == n
    }

    /// `K_n`, in increasing TU order.
    pub fn served_by(&self, n: usize) -> Vec<usize> {
        (0..self.varrho.len()).filter(|&k| self.varrho[k] == n).collect()
    }

    pub fn loads(&self) -> Vec<usize> {
        let mut loads = vec![0; self.num_bs];
        for &n in &self.varrho {
            loads[n] += 1;
        }
        loads
    }

    /// Per-TU flag: serving BS differs from `prev`.
    pub fn handovers(&self, prev: &AssociationMap) -> Vec<bool> {
        self.varrho.iter().zip(&prev.varrho).map(|(a, b)| a != b).collect()
    }
}

/// One beamformer per TU, transmitted by its serving BS.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamformerSet {
    w: Vec<CVec>,
}

impl BeamformerSet {
    pub fn new(w: Vec<CVec>) -> Self {
        Self { w }
    }

    pub fn zeros(num_tu: usize, m: usize) -> Self {
        Self { w: vec![CVec::zeros(m); num_tu] }
    }

    /// `w_k = sqrt(p_k) * dir_k / ||dir_k||`.
    pub fn from_parts(power: &[f64], directions: &[CVec]) -> Self {
        let w = power
            .iter()
            .zip(directions)
            .map(|(&p, d)| {
                let n = norm_sqr(d).sqrt();
                if n == 0.0 || p <= 0.0 {
                    CVec::zeros(d.len())
                } else {
                    d * num_complex::Complex64::from(p.sqrt() / n)
                }
            })
            .collect();
        Self { w }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn w(&self, k: usize) -> &CVec {
        &self.w[k]
    }

    pub fn as_slice(&self) -> &[CVec] {
        &self.w
    }

    pub fn into_inner(self) -> Vec<CVec> {
        self.w
    }

    /// `p_k = ||w_k||^2`.
    pub fn power(&self, k: usize) -> f64 {
        norm_sqr(&self.w[k])
    }

    pub fn powers(&self) -> Vec<f64> {
        self.w.iter().map(norm_sqr).collect()
    }

    /// Unit-norm direction; the zero vector when `p_k = 0`.
    pub fn direction(&self, k: usize) -> CVec {
        crate::linalg::normalized(&self.w[k])
    }

    /// Total transmit power of each BS.
    pub fn bs_power(&self, assoc: &AssociationMap) -> Vec<f64> {
        let mut out = vec![0.0; assoc.num_bs()];
        for (k, w) in self.w.iter().enumerate() {
            out[assoc.serving(k)] += norm_sqr(w);
        }
        out
    }

    pub fn scale(&mut self, k: usize, factor: f64) {
        self.w[k] *= num_complex::Complex64::from(factor);
    }
}

/// Derived PHY quantities of one slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhySnapshot {
    pub gamma: Vec<f64>,
    pub rate: Vec<f64>,
    /// Received desired power `p_k^r`.
    pub p_r: Vec<f64>,
    /// `beta[k][j]`: interference at TU `k` from BS `j`.
    pub beta_jk: Vec<Vec<f64>>,
    /// Interference plus noise per TU.
    pub beta: Vec<f64>,
    /// `rho_nl[n][l]`: LoS-inferred interference from BS `n` at AU `l`.
    pub rho_nl: Vec<Vec<f64>>,
    pub rho: Vec<f64>,
}

impl PhySnapshot {
    pub fn sum_rate(&self) -> f64 {
        self.rate.iter().sum()
    }
}

/// Decomposed interference at each TU.
#[derive(Clone, Debug, PartialEq)]
pub struct InterferenceBreakdown {
    pub beta_jk: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    pub p_r: Vec<f64>,
}

fn check_noise(sigma2: &[f64], k: usize) -> Result<()> {
    if sigma2.len() != k {
        return Err(Error::InvalidArgument(format!("noise has {} entries, expected {k}", sigma2.len())));
    }
    if let Some(s) = sigma2.iter().find(|&&s| !(s > 0.0)) {
        return Err(Error::InvalidArgument(format!("noise power must be positive, got {s}")));
    }
    Ok(())
}

fn check_shapes(assoc: &AssociationMap, bf: &BeamformerSet, channels: &[Vec<CVec>]) -> Result<()> {
    if bf.len() != assoc.num_tu() || channels.len() != assoc.num_bs() {
        return Err(Error::InvalidArgument(format!(
            "shape mismatch: {} TUs in association, {} beamformers, {} BS channel rows for {} BSs",
            assoc.num_tu(),
            bf.len(),
            channels.len(),
            assoc.num_bs()
        )));
    }
    if channels.iter().any(|row| row.len() != assoc.num_tu()) {
        return Err(Error::InvalidArgument("every BS needs a channel to every TU".into()));
    }
    Ok(())
}

/// Linear SINR per TU.
pub fn compute_sinr(
    assoc: &AssociationMap,
    bf: &BeamformerSet,
    channels: &[Vec<CVec>],
    sigma2: &[f64],
) -> Result<Vec<f64>> {
    let d = decompose_interference(assoc, bf, channels, sigma2)?;
    Ok(d.p_r.iter().zip(&d.beta).map(|(p, b)| p / b.max(POWER_FLOOR)).collect())
}

/// `log2(1 + gamma)` per TU.
pub fn compute_rate(gamma: &[f64]) -> Vec<f64> {
    gamma.iter().map(|g| g.ln_1p() / std::f64::consts::LN_2).collect()
}

pub fn decompose_interference(
    assoc: &AssociationMap,
    bf: &BeamformerSet,
    channels: &[Vec<CVec>],
    sigma2: &[f64],
) -> Result<InterferenceBreakdown> {
    check_shapes(assoc, bf, channels)?;
    let k_count = assoc.num_tu();
    check_noise(sigma2, k_count)?;
    let mut beta_jk = vec![vec![0.0; assoc.num_bs()]; k_count];
    let mut p_r = vec![0.0; k_count];
    for k in 0..k_count {
        for i in 0..k_count {
            let j = assoc.serving(i);
            let g = gain(&channels[j][k], bf.w(i));
            if i == k {
                p_r[k] = g;
            } else {
                beta_jk[k][j] += g;
            }
        }
    }
    let beta = beta_jk.iter().zip(sigma2).map(|(row, s)| row.iter().sum::<f64>() + s).collect();
    Ok(InterferenceBreakdown { beta_jk, beta, p_r })
}

/// Returns `(rho_l, rho_nl)`; `rho_nl` uses the supplied LoS-only channels.
pub fn au_interference(
    assoc: &AssociationMap,
    bf: &BeamformerSet,
    au_channels: &[Vec<CVec>],
    au_los: &[Vec<CVec>],
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n_au = au_channels.first().map_or(0, Vec::len);
    let mut rho = vec![0.0; n_au];
    let mut rho_nl = vec![vec![0.0; n_au]; assoc.num_bs()];
    for k in 0..assoc.num_tu() {
        let n = assoc.serving(k);
        for l in 0..n_au {
            rho[l] += gain(&au_channels[n][l], bf.w(k));
            rho_nl[n][l] += gain(&au_los[n][l], bf.w(k));
        }
    }
    (rho, rho_nl)
}

/// Everything the observation builders and metrics need for one slot.
pub fn snapshot(
    assoc: &AssociationMap,
    bf: &BeamformerSet,
    tu_channels: &[Vec<CVec>],
    au_channels: &[Vec<CVec>],
    au_los: &[Vec<CVec>],
    sigma2: &[f64],
) -> Result<PhySnapshot> {
    let d = decompose_interference(assoc, bf, tu_channels, sigma2)?;
    let gamma: Vec<f64> = d.p_r.iter().zip(&d.beta).map(|(p, b)| p / b.max(POWER_FLOOR)).collect();
    let rate = compute_rate(&gamma);
    let (rho, rho_nl) = au_interference(assoc, bf, au_channels, au_los);
    Ok(PhySnapshot { gamma, rate, p_r: d.p_r, beta_jk: d.beta_jk, beta: d.beta, rho_nl, rho })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintReport {
    pub power_ok: Vec<bool>,
    /// `P_max - sum_k p_k` per BS.
    pub power_margin: Vec<f64>,
    pub interference_ok: Vec<bool>,
    /// `I_max - rho_l` per AU.
    pub interference_margin: Vec<f64>,
}

impl ConstraintReport {
    pub fn all_ok(&self) -> bool {
        self.power_ok.iter().chain(&self.interference_ok).all(|&b| b)
    }
}

pub fn check_constraints(
    bf: &BeamformerSet,
    assoc: &AssociationMap,
    au_channels: &[Vec<CVec>],
    i_max: f64,
    p_max: f64,
) -> ConstraintReport {
    let power_margin: Vec<f64> = bf.bs_power(assoc).iter().map(|p| p_max - p).collect();
    let n_au = au_channels.first().map_or(0, Vec::len);
    let mut rho = vec![0.0; n_au];
    for k in 0..assoc.num_tu() {
        for (l, r) in rho.iter_mut().enumerate() {
            *r += gain(&au_channels[assoc.serving(k)][l], bf.w(k));
        }
    }
    let interference_margin: Vec<f64> = rho.iter().map(|r| i_max - r).collect();
    ConstraintReport {
        power_ok: power_margin.iter().map(|&m| m >= 0.0).collect(),
        power_margin,
        interference_ok: interference_margin.iter().map(|&m| m >= 0.0).collect(),
        interference_margin,
    }
}
