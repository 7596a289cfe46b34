//! Fixtures shared by the benchmarks.

use catn_core::rng::{complex_normal, stream, Domain};
use catn_core::{AssociationMap, CVec};

pub struct Instance {
    pub assoc: AssociationMap,
    pub tu: Vec<Vec<CVec>>,
    pub au: Vec<Vec<CVec>>,
    pub sigma2: Vec<f64>,
}

/// Rayleigh channels with round-robin association, scaled like a macro cell.
pub fn instance(n: usize, k: usize, m: usize, l: usize, seed: u64) -> Instance {
    let mut rng = stream(seed, Domain::Test, 0, 0);
    let mut draw = |scale: f64| CVec::from_fn(m, |_, _| complex_normal(&mut rng) * scale);
    let tu = (0..n).map(|_| (0..k).map(|_| draw(3e-6)).collect()).collect();
    let au = (0..n).map(|_| (0..l).map(|_| draw(1e-6)).collect()).collect();
    let assoc = AssociationMap::new((0..k).map(|i| i % n).collect(), n).expect("valid association");
    Instance { assoc, tu, au, sigma2: vec![3.98e-14; k] }
}
