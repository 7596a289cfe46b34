//! BS and TU rewards, the shared cost and the fixed-penalty reward.

use crate::error::{Error, Result};
use crate::linalg::{gain, CVec};
use crate::phy::{AssociationMap, BeamformerSet, PhySnapshot};

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// `r_n = sum_{k in K_n} R_k - sum_{i in U_n^out} (R_{i\n} - R_i)`, where
/// `R_{i\n}` removes all of BS `n`'s interference from TU `i`.
pub fn bs_reward(phy: &PhySnapshot, assoc: &AssociationMap, n: usize, u_out: &[usize], sigma2: &[f64]) -> f64 {
    let own: f64 = assoc.served_by(n).iter().map(|&k| phy.rate[k]).sum();
    let penalty: f64 = u_out
        .iter()
        .map(|&i| {
            let rest = (phy.beta[i] - phy.beta_jk[i][n]).max(sigma2[i]);
            log2_1p(phy.p_r[i] / rest) - phy.rate[i]
        })
        .sum();
    own - penalty
}

/// `leak[k][i] = |h_{varrho_k,i}^H w_k|^2`: power of beam `k` at TU `i`.
pub fn beam_leakage(assoc: &AssociationMap, bf: &BeamformerSet, tu: &[Vec<CVec>]) -> Vec<Vec<f64>> {
    (0..assoc.num_tu())
        .map(|k| {
            let n = assoc.serving(k);
            (0..assoc.num_tu()).map(|i| gain(&tu[n][i], bf.w(k))).collect()
        })
        .collect()
}

/// TU reward. `u_out` is `U^out` of the TU's serving BS; the rate of TU `k`
/// is discounted by `zeta_r` on a handover slot, and each penalty term
/// removes only beam `k` from the victim's interference.
#[allow(clippy::too_many_arguments)]
pub fn tu_reward(
    phy: &PhySnapshot,
    k: usize,
    handover: bool,
    zeta_r: f64,
    u_out: &[usize],
    leak: &[Vec<f64>],
    sigma2: &[f64],
) -> f64 {
    let own = if handover { zeta_r * phy.rate[k] } else { phy.rate[k] };
    let penalty: f64 = u_out
        .iter()
        .filter(|&&i| i != k)
        .map(|&i| {
            let rest = (phy.beta[i] - leak[k][i]).max(sigma2[i]);
            log2_1p(phy.p_r[i] / rest) - phy.rate[i]
        })
        .sum();
    own - penalty
}

/// `c_l = rho_l / I_max - 1`, identical for every BS.
pub fn bs_cost(rho: &[f64], i_max: f64) -> Result<Vec<f64>> {
    if !(i_max > 0.0) {
        return Err(Error::InvalidArgument(format!("I_max must be positive, got {i_max}")));
    }
    Ok(rho.iter().map(|r| r / i_max - 1.0).collect())
}

/// `r - zeta * sum_l max(c_l, 0)`.
pub fn penalty_reward(r: f64, cost: &[f64], zeta: f64) -> f64 {
    r - zeta * cost.iter().map(|c| c.max(0.0)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap() -> PhySnapshot {
        PhySnapshot {
            gamma: vec![3.0, 1.0],
            rate: vec![2.0, 1.0],
            p_r: vec![3.0, 1.0],
            beta_jk: vec![vec![0.0, 0.5], vec![0.0, 0.0]],
            beta: vec![1.0, 1.0],
            rho_nl: vec![],
            rho: vec![],
        }
    }

    #[test]
    fn cost_examples() {
        assert_eq!(bs_cost(&[2.0, 0.0, 4.0], 2.0).unwrap(), vec![0.0, -1.0, 1.0]);
        assert!(bs_cost(&[1.0], 0.0).is_err());
    }

    #[test]
    fn penalty_examples() {
        assert_eq!(penalty_reward(2.0, &[0.5, -1.0], 2.0), 1.0);
        assert_eq!(penalty_reward(2.0, &[-0.5], 5.0), 2.0);
        assert_eq!(penalty_reward(2.0, &[3.0], 0.0), 2.0);
    }

    #[test]
    fn no_leakage_means_plain_sum_rate() {
        let assoc = AssociationMap::new(vec![0, 1], 2).unwrap();
        let s = snap();
        assert_eq!(bs_reward(&s, &assoc, 0, &[1], &[0.5, 0.5]), 2.0);
    }

    #[test]
    fn handover_discount() {
        let s = snap();
        let leak = vec![vec![0.0; 2]; 2];
        assert_eq!(tu_reward(&s, 0, false, 0.4, &[], &leak, &[0.5; 2]), 2.0);
        assert!((tu_reward(&s, 0, true, 0.4, &[], &leak, &[0.5; 2]) - 0.8).abs() < 1e-15);
    }
}
