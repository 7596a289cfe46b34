//! TU agent observation: previous loads and association, current channel
//! strengths, and the TU's own previous power, rate, desired power and
//! interference.

use super::features::{FeatureScale, Field, ObsWriter};
use super::SlotInfo;

pub fn tu_observation_dim(num_bs: usize) -> usize {
    3 * num_bs + 4
}

fn write(k: usize, strengths: &[f64], prev: Option<&SlotInfo>, num_bs: usize, scale: &FeatureScale, w: &mut ObsWriter) {
    w.block("loads", num_bs, |w| match prev {
        Some(pv) => {
            let total = pv.assoc.num_tu().max(1) as f64;
            for c in pv.assoc.loads() {
                w.push(c as f64 / total);
            }
        }
        None => w.zeros(num_bs),
    });
    w.block("assoc", num_bs, |w| match prev {
        Some(pv) => {
            for n in 0..num_bs {
                w.push(if pv.assoc.chi(n, k) { 1.0 } else { 0.0 });
            }
        }
        None => w.zeros(num_bs),
    });
    w.block("strength", num_bs, |w| {
        for &s in strengths {
            w.push(scale.power(s));
        }
    });
    w.block("own", 4, |w| match prev {
        Some(pv) => {
            w.push(scale.power(pv.power[k]));
            w.push(scale.rate(pv.phy.rate[k]));
            w.push(scale.power(pv.phy.p_r[k]));
            w.push(scale.power(pv.phy.beta[k]));
        }
        None => w.zeros(4),
    });
}

/// `strengths[n] = ||h_{n,k}||^2` measured at the start of the current slot.
pub fn tu_observation(k: usize, strengths: &[f64], prev: Option<&SlotInfo>, scale: &FeatureScale) -> Vec<f64> {
    let mut w = ObsWriter::with_capacity(tu_observation_dim(strengths.len()));
    write(k, strengths, prev, strengths.len(), scale, &mut w);
    w.finish().0
}

pub fn tu_schema(num_bs: usize) -> Vec<Field> {
    let mut w = ObsWriter::default();
    write(0, &vec![0.0; num_bs], None, num_bs, &FeatureScale::default(), &mut w);
    w.finish().1
}
