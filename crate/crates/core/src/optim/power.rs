//! Joint association and per-BS power control for the first stage of the
//! optimizer baseline.

use crate::error::{Error, Result};
use crate::phy::AssociationMap;

use super::dcd::{dcd_associate, utilities, DcdConfig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stage1Config {
    pub max_rounds: usize,
    /// Newton sweeps over all BSs per power update.
    pub newton_sweeps: usize,
    /// Skip power control and run DCD once at full power.
    pub fixed_power: bool,
    /// Lowest power as a fraction of `P_max`, in log units.
    pub min_log_ratio: f64,
    pub dcd: DcdConfig,
}

impl Default for Stage1Config {
    fn default() -> Self {
        Self { max_rounds: 20, newton_sweeps: 5, fixed_power: false, min_log_ratio: -30.0, dcd: DcdConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stage1Outcome {
    pub assoc: AssociationMap,
    pub q: Vec<f64>,
    pub utility: f64,
    pub rounds: usize,
}

/// `sum_k [u_{varrho_k,k} - ln |K_{varrho_k}|]`: log of each TU's rate share.
pub fn sum_utility(assoc: &AssociationMap, q: &[f64], strengths: &[Vec<f64>], sigma2: &[f64], m: usize) -> Result<f64> {
    let u = utilities(q, strengths, sigma2, m)?;
    let loads = assoc.loads();
    Ok((0..assoc.num_tu())
        .map(|k| {
            let n = assoc.serving(k);
            u[k][n] - (loads[n] as f64).ln()
        })
        .sum())
}

fn utility_at(assoc: &AssociationMap, x: &[f64], strengths: &[Vec<f64>], sigma2: &[f64], m: usize) -> f64 {
    let q: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    sum_utility(assoc, &q, strengths, sigma2, m).unwrap_or(f64::NEG_INFINITY)
}

/// Coordinate-wise damped Newton ascent in `x_n = ln q_n` with
/// finite-difference derivatives and backtracking.
fn newton_power(
    assoc: &AssociationMap,
    q: &[f64],
    strengths: &[Vec<f64>],
    sigma2: &[f64],
    m: usize,
    p_max: f64,
    cfg: &Stage1Config,
) -> Option<Vec<f64>> {
    let hi = p_max.ln();
    let lo = hi + cfg.min_log_ratio;
    let mut x: Vec<f64> = q.iter().map(|v| v.ln().clamp(lo, hi)).collect();
    let mut f = utility_at(assoc, &x, strengths, sigma2, m);
    if !f.is_finite() {
        return None;
    }
    let h = 1e-4;
    for _ in 0..cfg.newton_sweeps {
        for n in 0..x.len() {
            let x0 = x[n];
            x[n] = x0 + h;
            let fp = utility_at(assoc, &x, strengths, sigma2, m);
            x[n] = x0 - h;
            let fm = utility_at(assoc, &x, strengths, sigma2, m);
            x[n] = x0;
            let d1 = (fp - fm) / (2.0 * h);
            let d2 = (fp - 2.0 * f + fm) / (h * h);
            if !d1.is_finite() || !d2.is_finite() {
                return None;
            }
            let mut step = if d2 < 0.0 { -d1 / d2 } else { d1.signum() };
            step = step.clamp(-2.0, 2.0);
            for _ in 0..12 {
                let cand = (x0 + step).clamp(lo, hi);
                x[n] = cand;
                let fc = utility_at(assoc, &x, strengths, sigma2, m);
                if fc > f {
                    f = fc;
                    break;
                }
                x[n] = x0;
                step *= 0.5;
            }
        }
    }
    Some(x.iter().map(|v| v.exp()).collect())
}

/// Alternates DCD association and power control until the association
/// repeats. Returns the best `(association, power)` pair seen.
pub fn stage1_ua_power(
    strengths: &[Vec<f64>],
    sigma2: &[f64],
    m: usize,
    p_max: f64,
    cfg: &Stage1Config,
) -> Result<Stage1Outcome> {
    if !(p_max > 0.0) {
        return Err(Error::InvalidArgument(format!("P_max must be positive, got {p_max}")));
    }
    let num_bs = strengths.first().map_or(0, Vec::len);
    let mut q = vec![p_max; num_bs];
    let mut assoc = dcd_associate(&q, strengths, sigma2, m, &cfg.dcd)?.assoc;
    let mut best = Stage1Outcome { utility: sum_utility(&assoc, &q, strengths, sigma2, m)?, assoc: assoc.clone(), q: q.clone(), rounds: 0 };
    if cfg.fixed_power || num_bs == 1 {
        return Ok(best);
    }
    for round in 1..=cfg.max_rounds {
        let Some(next_q) = newton_power(&assoc, &q, strengths, sigma2, m, p_max, cfg) else {
            log::warn!("power update diverged; keeping every BS at P_max");
            let q = vec![p_max; num_bs];
            let assoc = dcd_associate(&q, strengths, sigma2, m, &cfg.dcd)?.assoc;
            let utility = sum_utility(&assoc, &q, strengths, sigma2, m)?;
            return Ok(Stage1Outcome { assoc, q, utility, rounds: round });
        };
        q = next_q;
        let u_same = sum_utility(&assoc, &q, strengths, sigma2, m)?;
        if u_same > best.utility {
            best = Stage1Outcome { assoc: assoc.clone(), q: q.clone(), utility: u_same, rounds: round };
        }
        let next_assoc = dcd_associate(&q, strengths, sigma2, m, &cfg.dcd)?.assoc;
        if next_assoc == assoc {
            break;
        }
        assoc = next_assoc;
        let u_new = sum_utility(&assoc, &q, strengths, sigma2, m)?;
        if u_new > best.utility {
            best = Stage1Outcome { assoc: assoc.clone(), q: q.clone(), utility: u_new, rounds: round };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bs_uses_full_power() {
        let s = vec![vec![1e-10], vec![2e-11]];
        let out = stage1_ua_power(&s, &[4e-14; 2], 4, 20.0, &Stage1Config::default()).unwrap();
        assert_eq!(out.q, vec![20.0]);
        assert_eq!(out.assoc.as_slice(), &[0, 0]);
    }

    #[test]
    fn fixed_power_matches_plain_dcd() {
        let s = vec![vec![1e-10, 3e-11], vec![2e-11, 9e-11], vec![5e-11, 4e-11]];
        let sigma2 = [4e-14; 3];
        let cfg = Stage1Config { fixed_power: true, ..Stage1Config::default() };
        let out = stage1_ua_power(&s, &sigma2, 4, 20.0, &cfg).unwrap();
        let dcd = dcd_associate(&[20.0, 20.0], &s, &sigma2, 4, &DcdConfig::default()).unwrap();
        assert_eq!(out.assoc, dcd.assoc);
        assert_eq!(out.q, vec![20.0, 20.0]);
    }

    #[test]
    fn never_worse_than_equal_power() {
        let s = vec![vec![1e-10, 3e-11], vec![2e-11, 9e-11], vec![5e-11, 4e-11]];
        let sigma2 = [4e-14; 3];
        let base = dcd_associate(&[20.0, 20.0], &s, &sigma2, 4, &DcdConfig::default()).unwrap();
        let base_u = sum_utility(&base.assoc, &[20.0, 20.0], &s, &sigma2, 4).unwrap();
        let out = stage1_ua_power(&s, &sigma2, 4, 20.0, &Stage1Config::default()).unwrap();
        assert!(out.utility >= base_u);
        assert!(out.q.iter().all(|&q| q > 0.0 && q <= 20.0));
    }
}
