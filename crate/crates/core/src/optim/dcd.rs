//! Price-based user association by dual coordinate descent.

use crate::error::{Error, Result};
use crate::phy::AssociationMap;

use super::sc::argmax;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DcdConfig {
    /// Relative change of the dual objective that counts as converged.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DcdConfig {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 200 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DcdState {
    pub assoc: AssociationMap,
    pub mu_bar: Vec<f64>,
    pub nu_bar: f64,
    /// `utilities[k][n]`.
    pub utilities: Vec<Vec<f64>>,
    /// Dual objective after every sweep, starting with the initial point.
    pub g_trace: Vec<f64>,
    pub converged: bool,
}

impl DcdState {
    pub fn dual_objective(&self) -> f64 {
        *self.g_trace.last().expect("trace starts non-empty")
    }
}

/// SINR of TU `k` if served by BS `n` while every other BS transmits `q_m`.
/// `strengths[k][n] = ||h_{n,k}||^2`.
pub fn association_sinr(q: &[f64], strengths: &[Vec<f64>], sigma2: &[f64]) -> Vec<Vec<f64>> {
    strengths
        .iter()
        .zip(sigma2)
        .map(|(row, s2)| {
            let total: f64 = row.iter().zip(q).map(|(h, q)| h * q).sum();
            row.iter().zip(q).map(|(h, q)| h * q / (total - h * q + s2)).collect()
        })
        .collect()
}

/// `u[k][n] = ln(M log2(1 + SINR_{n,k}))`.
pub fn utilities(q: &[f64], strengths: &[Vec<f64>], sigma2: &[f64], m: usize) -> Result<Vec<Vec<f64>>> {
    let sinr = association_sinr(q, strengths, sigma2);
    let mut out = Vec::with_capacity(sinr.len());
    for (k, row) in sinr.iter().enumerate() {
        let mut urow = Vec::with_capacity(row.len());
        for (n, &s) in row.iter().enumerate() {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::ZeroSinr { bs: n, tu: k });
            }
            urow.push((m as f64 * s.ln_1p() / std::f64::consts::LN_2).ln());
        }
        out.push(urow);
    }
    Ok(out)
}

/// `g(mu, nu) = sum_k max_n (u - mu) + sum_n exp(mu_n - nu - 1) + nu K`.
pub fn dual_objective(u: &[Vec<f64>], mu: &[f64], nu: f64) -> f64 {
    let best: f64 = u.iter().map(|row| row.iter().zip(mu).map(|(u, m)| u - m).fold(f64::NEG_INFINITY, f64::max)).sum();
    let prices: f64 = mu.iter().map(|m| (m - nu - 1.0).exp()).sum();
    best + prices + nu * u.len() as f64
}

/// Value of a fixed assignment under given prices, i.e. the dual objective
/// with the inner maximisation replaced by `assignment`.
pub fn assignment_objective(u: &[Vec<f64>], mu: &[f64], nu: f64, assignment: &[usize]) -> f64 {
    let picked: f64 = assignment.iter().enumerate().map(|(k, &n)| u[k][n] - mu[n]).sum();
    let prices: f64 = mu.iter().map(|m| (m - nu - 1.0).exp()).sum();
    picked + prices + nu * u.len() as f64
}

fn nu_update(mu: &[f64], k: usize) -> f64 {
    (mu.iter().map(|m| (m - 1.0).exp()).sum::<f64>() / k as f64).ln()
}

/// `sup { mu : exp(mu - nu - 1) <= |U_n(mu)| }`.
///
/// TU `k` belongs to `U_n(mu)` exactly when `mu <= b_k`, where `b_k` is its
/// utility at `n` minus its best price-adjusted utility elsewhere. With the
/// `b_k` sorted in descending order, `|U_n| = i` on `(b_(i+1), b_(i)]`, so the
/// supremum is the largest `min(b_(i), nu + 1 + ln i)`.
fn price_sup(u: &[Vec<f64>], mu: &[f64], nu: f64, n: usize) -> f64 {
    let mut b: Vec<f64> = u
        .iter()
        .map(|row| {
            let rival = row
                .iter()
                .zip(mu)
                .enumerate()
                .filter(|&(m, _)| m != n)
                .map(|(_, (u, p))| u - p)
                .fold(f64::NEG_INFINITY, f64::max);
            row[n] - rival
        })
        .collect();
    b.sort_by(|x, y| y.total_cmp(x));
    b.iter().enumerate().map(|(i, &bi)| bi.min(nu + 1.0 + ((i + 1) as f64).ln())).fold(f64::NEG_INFINITY, f64::max)
}

/// Runs the dual coordinate descent from zero prices.
pub fn dcd_associate(
    q: &[f64],
    strengths: &[Vec<f64>],
    sigma2: &[f64],
    m: usize,
    cfg: &DcdConfig,
) -> Result<DcdState> {
    let num_bs = q.len();
    if num_bs == 0 {
        return Err(Error::InvalidArgument("DCD needs at least one BS".into()));
    }
    if let Some(p) = q.iter().find(|&&p| !(p > 0.0)) {
        return Err(Error::InvalidArgument(format!("BS transmit power must be positive, got {p}")));
    }
    if strengths.iter().any(|r| r.len() != num_bs) || sigma2.len() != strengths.len() {
        return Err(Error::InvalidArgument("strength matrix must be K x N with one noise entry per TU".into()));
    }
    let num_tu = strengths.len();
    if num_tu == 0 {
        return Ok(DcdState {
            assoc: AssociationMap::new(Vec::new(), num_bs)?,
            mu_bar: vec![0.0; num_bs],
            nu_bar: 0.0,
            utilities: Vec::new(),
            g_trace: vec![0.0],
            converged: true,
        });
    }
    let u = utilities(q, strengths, sigma2, m)?;
    let mut mu = vec![0.0; num_bs];
    let mut nu = nu_update(&mu, num_tu);
    let mut g = dual_objective(&u, &mu, nu);
    let mut trace = vec![g];
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        for n in 0..num_bs {
            mu[n] = price_sup(&u, &mu, nu, n);
        }
        nu = nu_update(&mu, num_tu);
        let next = dual_objective(&u, &mu, nu);
        if !next.is_finite() {
            return Err(Error::NonFinite("DCD dual objective"));
        }
        trace.push(next);
        let done = (next - g).abs() < cfg.tol * g.abs().max(1.0);
        g = next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("DCD hit the iteration cap ({}) before the dual objective settled", cfg.max_iter);
    }
    let varrho = recover_assignment(&u, &mu);
    Ok(DcdState { assoc: AssociationMap::new(varrho, num_bs)?, mu_bar: mu, nu_bar: nu, utilities: u, g_trace: trace, converged })
}

/// `argmax_n (u_{n,k} - mu_n)` per TU. Exact ties go to the tied BS with the
/// fewest TUs assigned so far, then to the lowest index, which keeps
/// symmetric instances balanced without changing the dual value.
fn recover_assignment(u: &[Vec<f64>], mu: &[f64]) -> Vec<usize> {
    let mut loads = vec![0usize; mu.len()];
    u.iter()
        .map(|row| {
            let adj: Vec<f64> = row.iter().zip(mu).map(|(u, p)| u - p).collect();
            let best = adj[argmax(&adj)];
            let tie = 1e-12 * best.abs().max(1.0);
            let n = (0..adj.len()).filter(|&n| best - adj[n] <= tie).min_by_key(|&n| (loads[n], n)).expect("non-empty");
            loads[n] += 1;
            n
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> DcdConfig {
        DcdConfig::default()
    }

    #[test]
    fn single_bs() {
        let s = vec![vec![1e-10], vec![3e-11], vec![5e-12]];
        let out = dcd_associate(&[20.0], &s, &[4e-14; 3], 4, &cfg()).unwrap();
        assert_eq!(out.assoc.as_slice(), &[0, 0, 0]);
        assert!(out.converged);
    }

    #[test]
    fn symmetric_pair_balances_load() {
        let s = vec![vec![1e-10, 1e-10], vec![1e-10, 1e-10]];
        let out = dcd_associate(&[1.0, 1.0], &s, &[1e-12; 2], 4, &cfg()).unwrap();
        assert_eq!(out.assoc.loads(), vec![1, 1]);
    }

    #[test]
    fn zero_link_is_reported() {
        let s = vec![vec![1e-10, 0.0]];
        match dcd_associate(&[1.0, 1.0], &s, &[1e-12], 4, &cfg()) {
            Err(Error::ZeroSinr { bs: 1, tu: 0 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn price_sup_satisfies_condition() {
        let u = vec![vec![3.0, 2.5], vec![2.0, 2.2], vec![4.0, 1.0], vec![1.5, 1.4]];
        let mu = vec![0.0, 0.3];
        let nu = 0.1;
        let s = price_sup(&u, &mu, nu, 0);
        let count = |x: f64| u.iter().filter(|r| r[0] - x >= r[1] - mu[1]).count() as f64;
        assert!((s - nu - 1.0).exp() <= count(s) + 1e-12);
        // Anything slightly larger is infeasible.
        let above = s + 1e-9;
        assert!((above - nu - 1.0).exp() > count(above));
    }

    #[test]
    fn dual_objective_never_increases() {
        let s = vec![vec![2e-10, 1e-10, 3e-11], vec![1e-11, 9e-11, 8e-11], vec![5e-11, 5e-11, 5e-11], vec![1e-10, 2e-12, 4e-11]];
        let out = dcd_associate(&[20.0, 10.0, 5.0], &s, &[4e-14; 4], 4, &cfg()).unwrap();
        for w in out.g_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0), "{:?}", out.g_trace);
        }
    }
}
