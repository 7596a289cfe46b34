//! BS agent observation.
//!
//! Layout: local TU block, local AU block, exchanged blocks about interferer
//! BSs of the most interfered TUs and of the AUs, and the blocks about TUs
//! and AUs this BS interferes with. Everything tagged `t - 1` comes from the
//! previous slot's [`SlotInfo`]; only the association, compressed CSI and
//! AU link statistics of the current slot are read from [`BsCurrent`].

use crate::channel::AuLinkStats;
use crate::phy::AssociationMap;

use super::codebook::CompressedChannel;
use super::features::{index_feature, FeatureScale, Field, ObsWriter};
use super::{EncodingParams, SlotInfo};

/// What BS `n` knows about the current slot before acting.
#[derive(Clone, Copy, Debug)]
pub struct BsCurrent<'a> {
    pub assoc: &'a AssociationMap,
    /// Compressed CSI of BS `n` to every TU.
    pub compressed: &'a [CompressedChannel],
    /// Link statistics of BS `n` to every AU.
    pub au_stats: &'a [AuLinkStats],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BsObsDims {
    pub loc: usize,
    pub loc_pri: usize,
    pub inn: usize,
    pub in_pri: usize,
    pub out: usize,
    pub out_pri: usize,
}

impl BsObsDims {
    pub fn new(p: &EncodingParams, num_tu: usize, num_au: usize) -> Self {
        let (k, l, nc) = (num_tu, num_au, p.nc);
        let s = &p.sets;
        Self {
            loc: 5 * k + 3 * nc * k,
            loc_pri: 5 * l,
            inn: ((1 + 3 * nc * k + k + 1) * s.b_in + 1) * s.k_in,
            in_pri: (k + 6) * s.b_in_pri * l,
            out: 4 * s.k_out * s.b_in,
            out_pri: 4 * l,
        }
    }

    pub fn total(&self) -> usize {
        self.loc + self.loc_pri + self.inn + self.in_pri + self.out + self.out_pri
    }
}

pub fn bs_observation_dim(p: &EncodingParams, num_tu: usize, num_au: usize) -> usize {
    BsObsDims::new(p, num_tu, num_au).total()
}

fn push_compressed(w: &mut ObsWriter, h: &CompressedChannel, codebook_size: usize, scale: &FeatureScale) {
    for (&c, &d) in h.index.iter().zip(&h.coeff) {
        w.push(index_feature(c, codebook_size));
        let (re, im) = scale.complex(d);
        w.push(re);
        w.push(im);
    }
}

/// `H_j^c` masked by the association of BS `j`.
fn push_masked_csi(w: &mut ObsWriter, row: &[CompressedChannel], assoc: &AssociationMap, j: usize, p: &EncodingParams) {
    for (k, h) in row.iter().enumerate() {
        if assoc.chi(j, k) {
            push_compressed(w, h, p.codebook_size, &p.scale);
        } else {
            w.zeros(3 * p.nc);
        }
    }
}

fn push_stats(w: &mut ObsWriter, s: &AuLinkStats, scale: &FeatureScale) {
    w.push(s.theta / std::f64::consts::PI);
    w.push(s.phi / std::f64::consts::PI);
    w.push(scale.power(s.gain));
    w.push(s.distance / 1e4);
}

fn push_masked_power(w: &mut ObsWriter, prev: &SlotInfo, j: usize, scale: &FeatureScale) {
    for k in 0..prev.power.len() {
        w.push(if prev.assoc.chi(j, k) { scale.power(prev.power[k]) } else { 0.0 });
    }
}

fn write(p: &EncodingParams, n: usize, cur: &BsCurrent, prev: Option<&SlotInfo>, w: &mut ObsWriter) {
    let num_tu = cur.assoc.num_tu();
    let num_bs = cur.assoc.num_bs();
    let num_au = cur.au_stats.len();
    let d = BsObsDims::new(p, num_tu, num_au);
    let sc = p.scale;
    let s = p.sets;

    w.block("loc", d.loc, |w| {
        for k in 0..num_tu {
            w.push(if cur.assoc.chi(n, k) { 1.0 } else { 0.0 });
        }
        for (k, h) in cur.compressed.iter().enumerate() {
            if cur.assoc.chi(n, k) {
                push_compressed(w, h, p.codebook_size, &sc);
            } else {
                w.zeros(3 * p.nc);
            }
        }
        match prev {
            Some(pv) => {
                let mask = |k: usize| pv.assoc.chi(n, k);
                for k in 0..num_tu {
                    w.push(if mask(k) { sc.power(pv.power[k]) } else { 0.0 });
                }
                for k in 0..num_tu {
                    w.push(if mask(k) { sc.rate(pv.phy.rate[k]) } else { 0.0 });
                }
                for k in 0..num_tu {
                    w.push(if mask(k) { sc.power(pv.phy.p_r[k]) } else { 0.0 });
                }
                for k in 0..num_tu {
                    w.push(if mask(k) { sc.power(pv.phy.beta_jk[k][n]) } else { 0.0 });
                }
            }
            None => w.zeros(4 * num_tu),
        }
    });

    w.block("loc_pri", d.loc_pri, |w| {
        for (l, st) in cur.au_stats.iter().enumerate() {
            push_stats(w, st, &sc);
            w.push(prev.map_or(0.0, |pv| sc.power(pv.phy.rho_nl[n][l])));
        }
    });

    let per_tu = 1 + (1 + 3 * p.nc * num_tu + num_tu + 1) * s.b_in;
    w.block("in", d.inn, |w| {
        let start = w.len();
        if let Some(pv) = prev {
            for &k in pv.sets.u_in[n].iter().take(s.k_in) {
                let entry = w.len();
                w.push(index_feature(k, num_tu));
                for &j in pv.sets.b_in[k].iter().take(s.b_in) {
                    w.push(index_feature(j, num_bs));
                    push_masked_csi(w, &pv.compressed[j], &pv.assoc, j, p);
                    push_masked_power(w, pv, j, &sc);
                    w.push(sc.power(pv.phy.beta_jk[k][j]));
                }
                let used = w.len() - entry;
                w.zeros(per_tu - used);
            }
        }
        let used = w.len() - start;
        w.zeros(d.inn - used);
    });

    let per_bs_pri = num_tu + 6;
    w.block("in_pri", d.in_pri, |w| {
        for l in 0..num_au {
            let start = w.len();
            if let Some(pv) = prev {
                for &j in pv.sets.b_in_pri[l].iter().take(s.b_in_pri) {
                    w.push(index_feature(j, num_bs));
                    push_stats(w, &pv.au_stats[j][l], &sc);
                    push_masked_power(w, pv, j, &sc);
                    w.push(sc.power(pv.phy.rho_nl[j][l]));
                }
            }
            let used = w.len() - start;
            w.zeros(per_bs_pri * s.b_in_pri - used);
        }
    });

    w.block("out", d.out, |w| {
        let start = w.len();
        if let Some(pv) = prev {
            for &i in pv.sets.u_out[n].iter().take(s.k_out * s.b_in) {
                let b = pv.phy.beta_jk[i][n];
                w.push(index_feature(i, num_tu));
                w.push(sc.rate(pv.phy.rate[i]));
                w.push(sc.power(b));
                w.push(if pv.phy.beta[i] > 0.0 { b / pv.phy.beta[i] } else { 0.0 });
            }
        }
        let used = w.len() - start;
        w.zeros(d.out - used);
    });

    w.block("out_pri", d.out_pri, |w| {
        for l in 0..num_au {
            w.push(index_feature(l, num_au));
            match prev {
                Some(pv) => {
                    let rho = pv.phy.rho[l];
                    let rho_n = pv.phy.rho_nl[n][l];
                    w.push((rho / p.i_max).ln_1p());
                    w.push(sc.power(rho_n));
                    w.push(if rho > 0.0 { rho_n / rho } else { 0.0 });
                }
                None => w.zeros(3),
            }
        }
    });
}

/// Observation of BS `n` in the current slot. `prev` is `None` only before
/// the first transmission, in which case every delayed block is zero.
pub fn bs_observation(p: &EncodingParams, n: usize, cur: &BsCurrent, prev: Option<&SlotInfo>) -> Vec<f64> {
    let mut w = ObsWriter::with_capacity(bs_observation_dim(p, cur.assoc.num_tu(), cur.au_stats.len()));
    write(p, n, cur, prev, &mut w);
    w.finish().0
}

/// Field layout of the BS observation for the given sizes.
pub fn bs_schema(p: &EncodingParams, num_bs: usize, num_tu: usize, num_au: usize) -> Vec<Field> {
    let assoc = AssociationMap::single(num_tu, num_bs);
    let compressed = vec![CompressedChannel::zeros(p.nc); num_tu];
    let stats = vec![AuLinkStats { theta: 0.0, phi: 0.0, gain: 0.0, distance: 0.0 }; num_au];
    let cur = BsCurrent { assoc: &assoc, compressed: &compressed, au_stats: &stats };
    let mut w = ObsWriter::default();
    write(p, 0, &cur, None, &mut w);
    w.finish().1
}
