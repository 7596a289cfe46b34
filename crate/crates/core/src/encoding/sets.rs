//! Interferer and interfered sets used by observations and rewards.

use crate::phy::{AssociationMap, PhySnapshot};

/// Set sizes. Each is the exact cardinality requested by the thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SetSizes {
    /// `|B_k^in|`.
    pub b_in: usize,
    /// `|B_l^in,pri|`.
    pub b_in_pri: usize,
    /// Upper bound on `|U_n^in|`.
    pub k_in: usize,
    /// `|U_n^out| = k_out * b_in`.
    pub k_out: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterfererSets {
    /// `B_k^in` per TU: strongest interfering BSs.
    pub b_in: Vec<Vec<usize>>,
    /// `U_n^in` per BS: its most interfered served TUs.
    pub u_in: Vec<Vec<usize>>,
    /// `B_l^in,pri` per AU: strongest interfering BSs.
    pub b_in_pri: Vec<Vec<usize>>,
    /// `U_n^out` per BS: TUs it interferes with most.
    pub u_out: Vec<Vec<usize>>,
}

/// Indices of the `count` largest entries of `key`, strongest first, ties to
/// the lower index. Falls back to `fallback` ranking when `key` is all zero.
pub fn top_indices(key: &[f64], fallback: Option<&[f64]>, count: usize) -> Vec<usize> {
    let use_fallback = fallback.is_some() && key.iter().all(|&v| v == 0.0);
    let metric = if use_fallback { fallback.unwrap() } else { key };
    let mut order: Vec<usize> = (0..metric.len()).collect();
    order.sort_by(|&a, &b| metric[b].total_cmp(&metric[a]).then(a.cmp(&b)));
    order.truncate(count);
    order
}

/// Computes every set from one slot's snapshot. `strengths[k][n]` and
/// `au_gain[n][l]` drive the fallbacks when interference is all zero.
pub fn select_interferer_sets(
    phy: &PhySnapshot,
    assoc: &AssociationMap,
    strengths: &[Vec<f64>],
    au_gain: &[Vec<f64>],
    sizes: &SetSizes,
) -> InterfererSets {
    let num_bs = assoc.num_bs();
    let num_tu = assoc.num_tu();
    let num_au = phy.rho.len();
    let b_in = (0..num_tu).map(|k| top_indices(&phy.beta_jk[k], Some(&strengths[k]), sizes.b_in.min(num_bs))).collect();
    let u_in = (0..num_bs)
        .map(|n| {
            let served = assoc.served_by(n);
            let key: Vec<f64> = served.iter().map(|&k| phy.beta[k]).collect();
            top_indices(&key, None, sizes.k_in.min(served.len())).into_iter().map(|i| served[i]).collect()
        })
        .collect();
    let b_in_pri = (0..num_au)
        .map(|l| {
            let key: Vec<f64> = (0..num_bs).map(|n| phy.rho_nl[n][l]).collect();
            let fb: Vec<f64> = (0..num_bs).map(|n| au_gain[n][l]).collect();
            top_indices(&key, Some(&fb), sizes.b_in_pri.min(num_bs))
        })
        .collect();
    let u_out = (0..num_bs)
        .map(|n| {
            let key: Vec<f64> = (0..num_tu).map(|i| phy.beta_jk[i][n]).collect();
            let fb: Vec<f64> = (0..num_tu).map(|i| strengths[i][n]).collect();
            top_indices(&key, Some(&fb), (sizes.k_out * sizes.b_in).min(num_tu))
        })
        .collect();
    InterfererSets { b_in, u_in, b_in_pri, u_out }
}

/// Sets available before any transmission: channel-strength rankings.
pub fn initial_sets(assoc: &AssociationMap, strengths: &[Vec<f64>], au_gain: &[Vec<f64>], sizes: &SetSizes) -> InterfererSets {
    let num_bs = assoc.num_bs();
    let num_tu = assoc.num_tu();
    let num_au = au_gain.first().map_or(0, Vec::len);
    let zero = PhySnapshot {
        gamma: vec![0.0; num_tu],
        rate: vec![0.0; num_tu],
        p_r: vec![0.0; num_tu],
        beta_jk: vec![vec![0.0; num_bs]; num_tu],
        beta: vec![0.0; num_tu],
        rho_nl: vec![vec![0.0; num_au]; num_bs],
        rho: vec![0.0; num_au],
    };
    select_interferer_sets(&zero, assoc, strengths, au_gain, sizes)
}
