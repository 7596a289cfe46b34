//! Scalar feature transforms and a vector writer that records its layout.

use num_complex::Complex64;
use serde::Serialize;

/// One named span of an observation vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Field {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

#[derive(Clone, Debug, Default)]
pub struct ObsWriter {
    data: Vec<f64>,
    fields: Vec<Field>,
}

impl ObsWriter {
    pub fn with_capacity(n: usize) -> Self {
        Self { data: Vec::with_capacity(n), fields: Vec::new() }
    }

    pub fn push(&mut self, x: f64) {
        self.data.push(x);
    }

    pub fn zeros(&mut self, n: usize) {
        self.data.resize(self.data.len() + n, 0.0);
    }

    /// Writes a named block and checks that it has exactly `len` entries.
    pub fn block(&mut self, name: &str, len: usize, f: impl FnOnce(&mut Self)) {
        let offset = self.data.len();
        f(self);
        let written = self.data.len() - offset;
        assert_eq!(written, len, "block {name} wrote {written} entries, layout says {len}");
        self.fields.push(Field { name: name.to_string(), offset, len });
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn finish(self) -> (Vec<f64>, Vec<Field>) {
        (self.data, self.fields)
    }
}

/// Feature scaling shared by both observation builders.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeatureScale {
    /// Floor applied to `log10` of powers and gains.
    pub log_floor: f64,
}

impl Default for FeatureScale {
    fn default() -> Self {
        Self { log_floor: -40.0 }
    }
}

impl FeatureScale {
    /// `(max(log10 x, floor) - floor) / 10`; zero stays zero.
    pub fn power(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        (x.log10().max(self.log_floor) - self.log_floor) / 10.0
    }

    /// Log-power magnitude along the phase of `z`, as `(re, im)`.
    pub fn complex(&self, z: Complex64) -> (f64, f64) {
        let mag = self.power(z.norm_sqr());
        if mag == 0.0 {
            return (0.0, 0.0);
        }
        let phase = z.arg();
        (mag * phase.cos(), mag * phase.sin())
    }

    pub fn rate(&self, r: f64) -> f64 {
        r.max(0.0).ln_1p()
    }
}

/// 1-based position normalised by `count`; zero is reserved for padding.
pub fn index_feature(i: usize, count: usize) -> f64 {
    (i + 1) as f64 / count.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_scale_floor_and_zero() {
        let s = FeatureScale::default();
        assert_eq!(s.power(0.0), 0.0);
        assert_eq!(s.power(1e-50), 0.0);
        assert!((s.power(1.0) - 4.0).abs() < 1e-12);
        assert!((s.power(1e-13) - 2.7).abs() < 1e-12);
    }

    #[test]
    #[should_panic]
    fn block_length_is_checked() {
        let mut w = ObsWriter::default();
        w.block("x", 2, |w| w.push(1.0));
    }
}
