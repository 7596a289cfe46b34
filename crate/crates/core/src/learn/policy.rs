//! Diagonal Gaussian policy with a sigmoid-bounded mean and a learned,
//! state-independent log standard deviation.

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Mlp};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPolicy {
    pub net: Mlp,
    pub log_std: Vec<f64>,
}

/// Lowest value an executed action may take.
pub const ACTION_FLOOR: f64 = 1e-6;

impl GaussianPolicy {
    /// `hidden` activations are ReLU except the last, which is sigmoid; the
    /// output head is sigmoid.
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, hidden: &[usize], action_dim: usize, log_std_init: f64, rng: &mut R) -> Self {
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(action_dim);
        let mut acts = vec![Activation::Relu; hidden.len()];
        if let Some(last) = acts.last_mut() {
            *last = Activation::Sigmoid;
        }
        acts.push(Activation::Sigmoid);
        let mut gains = vec![2f64.sqrt(); hidden.len()];
        if let Some(last) = gains.last_mut() {
            *last = 1.0;
        }
        gains.push(0.01);
        Self { net: Mlp::orthogonal(&sizes, &acts, &gains, rng), log_std: vec![log_std_init; action_dim] }
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn num_params(&self) -> usize {
        self.net.num_params() + self.log_std.len()
    }

    /// Network parameters followed by the log-std vector.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut v = self.net.params().to_vec();
        v.extend_from_slice(&self.log_std);
        v
    }

    pub fn set_flat_params(&mut self, p: &[f64]) {
        let n = self.net.num_params();
        assert_eq!(p.len(), n + self.log_std.len());
        self.net.params_mut().copy_from_slice(&p[..n]);
        self.log_std.copy_from_slice(&p[n..]);
    }

    pub fn means(&self, obs: ArrayView2<f64>) -> Array2<f64> {
        self.net.forward(obs)
    }

    pub fn mean_one(&self, obs: &[f64]) -> Vec<f64> {
        self.net.forward_one(obs)
    }

    /// Unclipped Gaussian draw around the mean.
    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Vec<f64> {
        let mean = self.mean_one(obs);
        mean.iter()
            .zip(&self.log_std)
            .map(|(m, s)| {
                let z: f64 = rng.sample(StandardNormal);
                m + s.exp() * z
            })
            .collect()
    }

    pub fn log_prob(&self, mean: &[f64], action: &[f64]) -> f64 {
        log_prob(mean, &self.log_std, action)
    }

    /// Per-row log-probabilities of `actions`.
    pub fn log_probs(&self, obs: ArrayView2<f64>, actions: ArrayView2<f64>) -> Vec<f64> {
        let means = self.means(obs);
        means
            .rows()
            .into_iter()
            .zip(actions.rows())
            .map(|(m, a)| log_prob(m.as_slice().unwrap(), &self.log_std, &a.to_vec()))
            .collect()
    }

    /// Mean over rows of `KL(self || other)`.
    pub fn mean_kl(&self, other: &GaussianPolicy, obs: ArrayView2<f64>) -> f64 {
        let a = self.means(obs);
        let b = other.means(obs);
        let n = a.nrows().max(1) as f64;
        a.rows()
            .into_iter()
            .zip(b.rows())
            .map(|(ma, mb)| kl(ma.as_slice().unwrap(), &self.log_std, mb.as_slice().unwrap(), &other.log_std))
            .sum::<f64>()
            / n
    }
}

/// Clips a raw sample into the executable range `[ACTION_FLOOR, 1]`.
pub fn clip_action(raw: &[f64]) -> Vec<f64> {
    raw.iter().map(|&x| if x.is_finite() { x.clamp(ACTION_FLOOR, 1.0) } else { ACTION_FLOOR }).collect()
}

pub fn log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((m, s), a)| {
            let z = (a - m) / s.exp();
            -0.5 * z * z - s - 0.5 * LN_2PI
        })
        .sum()
}

/// `KL(p || q)` between diagonal Gaussians.
pub fn kl(mp: &[f64], sp: &[f64], mq: &[f64], sq: &[f64]) -> f64 {
    let mut total = 0.0;
    for d in 0..mp.len() {
        let vp = (2.0 * sp[d]).exp();
        let vq = (2.0 * sq[d]).exp();
        let dm = mp[d] - mq[d];
        total += sq[d] - sp[d] + (vp + dm * dm) / (2.0 * vq) - 0.5;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    #[test]
    fn kl_is_zero_for_identical_and_positive_otherwise() {
        assert_eq!(kl(&[0.3], &[-1.0], &[0.3], &[-1.0]), 0.0);
        assert!(kl(&[0.3, 0.1], &[-1.0, 0.0], &[0.2, 0.1], &[-0.5, 0.2]) > 0.0);
    }

    #[test]
    fn log_prob_matches_density() {
        let lp = log_prob(&[0.5], &[0.0], &[1.5]);
        let expect = (-(0.5f64) - 0.5 * (2.0 * std::f64::consts::PI).ln()).exp();
        assert!((lp.exp() - expect).abs() < 1e-14);
    }

    #[test]
    fn means_are_in_unit_interval() {
        let mut rng = stream(3, Domain::Test, 0, 0);
        let pol = GaussianPolicy::new(5, &[8, 4], 3, -1.0, &mut rng);
        let m = pol.mean_one(&[10.0, -3.0, 2.0, 0.0, 1.0]);
        assert!(m.iter().all(|&x| x > 0.0 && x < 1.0));
        let raw = pol.sample(&[0.0; 5], &mut rng);
        assert!(clip_action(&raw).iter().all(|&x| (ACTION_FLOOR..=1.0).contains(&x)));
    }
}
