//! Fully connected network on a flat parameter vector, with hand-written
//! backpropagation.

use nalgebra::DMatrix;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Layer `l` maps `sizes[l]` inputs to `sizes[l + 1]` outputs. Its weights
/// are stored row-major as an `(out, in)` block followed by `out` biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    activations: Vec<Activation>,
    params: Vec<f64>,
}

/// Intermediate values kept for the backward pass.
pub struct Tape {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    output: Array2<f64>,
}

impl Tape {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }
}

impl Mlp {
    /// Zero-initialised network. `activations` has one entry per layer.
    pub fn zeros(sizes: &[usize], activations: &[Activation]) -> Self {
        assert!(sizes.len() >= 2, "need input and output sizes");
        assert_eq!(activations.len(), sizes.len() - 1, "one activation per layer");
        let count = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Self { sizes: sizes.to_vec(), activations: activations.to_vec(), params: vec![0.0; count] }
    }

    /// Orthogonal weights scaled by `gains[l]`, zero biases.
    pub fn orthogonal<R: Rng + ?Sized>(sizes: &[usize], activations: &[Activation], gains: &[f64], rng: &mut R) -> Self {
        assert_eq!(gains.len(), activations.len());
        let mut net = Self::zeros(sizes, activations);
        for l in 0..net.num_layers() {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let (rows, cols) = (fan_out.max(fan_in), fan_out.min(fan_in));
            let g = DMatrix::<f64>::from_fn(rows, cols, |_, _| rng.sample(StandardNormal));
            let qr = g.qr();
            let mut q = qr.q();
            let r = qr.r();
            for j in 0..cols {
                if r[(j, j)] < 0.0 {
                    q.column_mut(j).neg_mut();
                }
            }
            let off = net.offset(l);
            for o in 0..fan_out {
                for i in 0..fan_in {
                    let v = if fan_out >= fan_in { q[(o, i)] } else { q[(i, o)] };
                    net.params[off + o * fan_in + i] = gains[l] * v;
                }
            }
        }
        net
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn offset(&self, layer: usize) -> usize {
        self.sizes.windows(2).take(layer).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn weights(&self, layer: usize) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let (i, o) = (self.sizes[layer], self.sizes[layer + 1]);
        let off = self.offset(layer);
        let w = ArrayView2::from_shape((o, i), &self.params[off..off + o * i]).unwrap();
        let b = ArrayView1::from(&self.params[off + o * i..off + o * i + o]);
        (w, b)
    }

    /// Batched forward pass; rows of `x` are samples.
    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut a = x.to_owned();
        for l in 0..self.num_layers() {
            let (w, b) = self.weights(l);
            let mut z = a.dot(&w.t());
            z += &b;
            let act = self.activations[l];
            z.mapv_inplace(|v| act.apply(v));
            a = z;
        }
        a
    }

    pub fn forward_one(&self, x: &[f64]) -> Vec<f64> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("input length");
        self.forward(view).into_raw_vec_and_offset().0
    }

    pub fn forward_tape(&self, x: ArrayView2<f64>) -> Tape {
        let mut inputs = Vec::with_capacity(self.num_layers());
        let mut pre = Vec::with_capacity(self.num_layers());
        let mut a = x.to_owned();
        for l in 0..self.num_layers() {
            let (w, b) = self.weights(l);
            let mut z = a.dot(&w.t());
            z += &b;
            let act = self.activations[l];
            let next = z.mapv(|v| act.apply(v));
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        Tape { inputs, pre, output: a }
    }

    /// Accumulates `d loss / d params` into `grad` given `d loss / d output`.
    pub fn backward(&self, tape: &Tape, grad_out: ArrayView2<f64>, grad: &mut [f64]) {
        assert_eq!(grad.len(), self.params.len());
        let mut delta = grad_out.to_owned();
        for l in (0..self.num_layers()).rev() {
            let act = self.activations[l];
            let out = if l + 1 == self.num_layers() { &tape.output } else { &tape.inputs[l + 1] };
            ndarray::Zip::from(&mut delta).and(&tape.pre[l]).and(out).for_each(|d, &z, &a| *d *= act.derivative(z, a));
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let off = self.offset(l);
            let gw = delta.t().dot(&tape.inputs[l]);
            let gb = delta.sum_axis(Axis(0));
            for (dst, src) in grad[off..off + o * i].iter_mut().zip(gw.iter()) {
                *dst += src;
            }
            for (dst, src) in grad[off + o * i..off + o * i + o].iter_mut().zip(gb.iter()) {
                *dst += src;
            }
            if l > 0 {
                let (w, _) = self.weights(l);
                delta = delta.dot(&w);
            }
        }
    }

    /// Copies one row of a batch output.
    pub fn row(out: &Array2<f64>, r: usize) -> Array1<f64> {
        out.slice(s![r, ..]).to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    fn toy() -> Mlp {
        let mut rng = stream(1, Domain::Test, 0, 0);
        Mlp::orthogonal(&[3, 4, 2], &[Activation::Tanh, Activation::Sigmoid], &[1.0, 1.0], &mut rng)
    }

    #[test]
    fn orthogonal_rows_are_orthonormal() {
        let mut rng = stream(2, Domain::Test, 0, 0);
        let net = Mlp::orthogonal(&[6, 4], &[Activation::Identity], &[1.0], &mut rng);
        let (w, _) = net.weights(0);
        let g = w.dot(&w.t());
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut net = toy();
        let x = Array2::from_shape_vec((2, 3), vec![0.3, -0.2, 0.9, -1.1, 0.4, 0.05]).unwrap();
        let loss = |n: &Mlp| n.forward(x.view()).iter().map(|v| v * v).sum::<f64>();
        let tape = net.forward_tape(x.view());
        let gout = tape.output().mapv(|v| 2.0 * v);
        let mut grad = vec![0.0; net.num_params()];
        net.backward(&tape, gout.view(), &mut grad);
        for p in 0..net.num_params() {
            let orig = net.params[p];
            net.params[p] = orig + 1e-6;
            let up = loss(&net);
            net.params[p] = orig - 1e-6;
            let down = loss(&net);
            net.params[p] = orig;
            let fd = (up - down) / 2e-6;
            assert!((fd - grad[p]).abs() <= 1e-6 * fd.abs().max(1e-3), "param {p}: {fd} vs {}", grad[p]);
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let net = toy();
        assert_eq!(net.forward_one(&[0.1, 0.2, 0.3]), net.forward_one(&[0.1, 0.2, 0.3]));
    }
}
