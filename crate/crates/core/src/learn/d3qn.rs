//! Dueling double deep Q-learning for the discrete association choice.

use std::collections::VecDeque;

use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::mlp::{Activation, Mlp};

pub const EPS_INIT: f64 = 0.3;
pub const EPS_MIN: f64 = 0.005;
pub const EPS_DECAY: f64 = 0.995;

/// Shared trunk with a one-unit value head and an advantage head, stored as a
/// single network whose output row is `[V, A_1, .., A_n]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuelingQ {
    pub net: Mlp,
}

impl DuelingQ {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, hidden: &[usize], num_actions: usize, rng: &mut R) -> Self {
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(num_actions + 1);
        let mut acts = vec![Activation::Relu; hidden.len()];
        acts.push(Activation::Identity);
        let mut gains = vec![2f64.sqrt(); hidden.len()];
        gains.push(1.0);
        Self { net: Mlp::orthogonal(&sizes, &acts, &gains, rng) }
    }

    pub fn num_actions(&self) -> usize {
        self.net.output_dim() - 1
    }

    /// `Q(o, a) = V(o) + A(o, a) - mean_a A(o, a)` for every row.
    pub fn q_values(&self, obs: ArrayView2<f64>) -> Array2<f64> {
        aggregate(&self.net.forward(obs))
    }

    pub fn q_one(&self, obs: &[f64]) -> Vec<f64> {
        let out = self.net.forward_one(obs);
        aggregate_row(&out)
    }
}

pub fn aggregate_row(out: &[f64]) -> Vec<f64> {
    let n = out.len() - 1;
    let mean = out[1..].iter().sum::<f64>() / n as f64;
    out[1..].iter().map(|a| out[0] + a - mean).collect()
}

fn aggregate(out: &Array2<f64>) -> Array2<f64> {
    let n = out.ncols() - 1;
    let mut q = Array2::zeros((out.nrows(), n));
    for (r, row) in out.rows().into_iter().enumerate() {
        for (a, v) in aggregate_row(row.as_slice().unwrap()).into_iter().enumerate() {
            q[(r, a)] = v;
        }
    }
    q
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub obs: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Vec<f64>,
}

/// FIFO replay memory; the oldest item is evicted when full.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayMemory<T> {
    capacity: usize,
    items: VecDeque<T>,
}

impl<T> ReplayMemory<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self { capacity, items: VecDeque::with_capacity(capacity) }
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(item);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    /// Uniform batch without replacement (the whole memory if smaller).
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<&T> {
        let b = batch.min(self.items.len());
        sample(rng, self.items.len(), b).into_iter().map(|i| &self.items[i]).collect()
    }
}

fn stack(rows: impl Iterator<Item = Vec<f64>>, n: usize) -> Array2<f64> {
    let flat: Vec<f64> = rows.flatten().collect();
    let d = if n == 0 { 0 } else { flat.len() / n };
    Array2::from_shape_vec((n, d), flat).expect("batch shape")
}

/// Double-DQN targets: the online net picks the next action, the target net
/// evaluates it.
pub fn d3qn_targets(online: &DuelingQ, target: &DuelingQ, batch: &[&Experience], gamma: f64) -> Vec<f64> {
    let next = stack(batch.iter().map(|e| e.next_obs.clone()), batch.len());
    let q_on = online.q_values(next.view());
    let q_tg = target.q_values(next.view());
    batch
        .iter()
        .enumerate()
        .map(|(j, e)| {
            let best = argmax(q_on.row(j).as_slice().unwrap());
            e.reward + gamma * q_tg[(j, best)]
        })
        .collect()
}

/// `(1/2B) sum (Q(o_j, a_j) - y_j)^2` and its gradient over the online
/// parameters.
pub fn d3qn_loss(online: &DuelingQ, target: &DuelingQ, batch: &[&Experience], gamma: f64) -> (f64, Vec<f64>) {
    let y = d3qn_targets(online, target, batch, gamma);
    let obs = stack(batch.iter().map(|e| e.obs.clone()), batch.len());
    let tape = online.net.forward_tape(obs.view());
    let out = tape.output();
    let n = online.num_actions();
    let b = batch.len().max(1) as f64;
    let mut gout = Array2::zeros(out.dim());
    let mut loss = 0.0;
    for (j, e) in batch.iter().enumerate() {
        let q = aggregate_row(out.row(j).as_slice().unwrap())[e.action];
        let diff = q - y[j];
        loss += diff * diff / (2.0 * b);
        let g = diff / b;
        gout[(j, 0)] = g;
        for a in 0..n {
            let ind = if a == e.action { 1.0 } else { 0.0 };
            gout[(j, 1 + a)] = g * (ind - 1.0 / n as f64);
        }
    }
    let mut grad = vec![0.0; online.net.num_params()];
    online.net.backward(&tape, gout.view(), &mut grad);
    (loss, grad)
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Returns the chosen action and whether it was a random draw.
pub fn epsilon_greedy<R: Rng + ?Sized>(q: &[f64], eps: f64, rng: &mut R) -> (usize, bool) {
    if rng.random::<f64>() < eps {
        (rng.random_range(0..q.len()), true)
    } else {
        (argmax(q), false)
    }
}

pub fn decay_eps(eps: f64) -> f64 {
    (EPS_DECAY * eps).max(EPS_MIN)
}

/// Hard target copy every `period` slots.
pub fn target_sync_due(slot: u64, period: u64) -> bool {
    period > 0 && slot > 0 && slot % period == 0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct D3qnHyper {
    pub gamma: f64,
    pub lr: f64,
    pub memory: usize,
    pub batch: usize,
    pub target_period: u64,
    pub eps_init: f64,
}

impl Default for D3qnHyper {
    fn default() -> Self {
        Self { gamma: 0.5, lr: 1e-3, memory: 2000, batch: 200, target_period: 50, eps_init: EPS_INIT }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct D3qnAgent {
    pub online: DuelingQ,
    pub target: DuelingQ,
    pub opt: Adam,
    pub eps: f64,
    pub memory: ReplayMemory<Experience>,
}

impl D3qnAgent {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, hidden: &[usize], num_actions: usize, hyper: &D3qnHyper, rng: &mut R) -> Self {
        let online = DuelingQ::new(obs_dim, hidden, num_actions, rng);
        Self {
            target: online.clone(),
            opt: Adam::new(online.net.num_params(), hyper.lr),
            online,
            eps: hyper.eps_init,
            memory: ReplayMemory::new(hyper.memory),
        }
    }

    /// One gradient step on a sampled batch; returns the loss.
    pub fn learn<R: Rng + ?Sized>(&mut self, hyper: &D3qnHyper, rng: &mut R) -> f64 {
        if self.memory.is_empty() {
            return 0.0;
        }
        let batch = self.memory.sample(hyper.batch, rng);
        let (loss, grad) = d3qn_loss(&self.online, &self.target, &batch, hyper.gamma);
        if loss.is_finite() && grad.iter().all(|g| g.is_finite()) {
            self.opt.step(self.online.net.params_mut(), &grad);
        } else {
            log::warn!("non-finite Q loss; step skipped");
        }
        loss
    }

    pub fn sync_target(&mut self) {
        self.target = self.online.clone();
    }

    /// Epsilon-greedy action; epsilon decays after each such draw.
    pub fn act<R: Rng + ?Sized>(&mut self, obs: &[f64], rng: &mut R) -> usize {
        let q = self.online.q_one(obs);
        let (a, _) = epsilon_greedy(&q, self.eps, rng);
        self.eps = decay_eps(self.eps);
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    #[test]
    fn equal_advantages_give_value() {
        assert_eq!(aggregate_row(&[2.0, 0.5, 0.5, 0.5]), vec![2.0; 3]);
        assert_eq!(aggregate_row(&[-1.0, 5.0]), vec![-1.0]);
    }

    #[test]
    fn two_action_hand_case() {
        // V = 1, A = (3, 1): mean 2, Q = (2, 0).
        assert_eq!(aggregate_row(&[1.0, 3.0, 1.0]), vec![2.0, 0.0]);
    }

    #[test]
    fn epsilon_schedule() {
        let mut e = EPS_INIT;
        for _ in 0..2000 {
            e = decay_eps(e);
        }
        assert_eq!(e, EPS_MIN);
        assert_eq!(decay_eps(0.3), 0.995 * 0.3);
    }

    #[test]
    fn greedy_when_eps_zero() {
        let mut rng = stream(1, Domain::Test, 0, 0);
        for _ in 0..100 {
            assert_eq!(epsilon_greedy(&[0.1, 0.9, 0.3], 0.0, &mut rng), (1, false));
        }
    }

    #[test]
    fn exploration_rate() {
        let mut rng = stream(2, Domain::Test, 0, 0);
        let n = 100_000;
        let explored = (0..n).filter(|_| epsilon_greedy(&[0.0, 1.0], 0.5, &mut rng).1).count();
        assert!((explored as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn sync_schedule() {
        assert!(!target_sync_due(49, 50));
        assert!(target_sync_due(50, 50));
        assert_eq!((1..=200).filter(|&s| target_sync_due(s, 50)).count(), 4);
    }

    #[test]
    fn replay_evicts_oldest() {
        let mut m = ReplayMemory::new(3);
        for i in 0..5 {
            m.push(i);
        }
        assert_eq!(m.iter().copied().collect::<Vec<_>>(), vec![2, 3, 4]);
        let mut rng = stream(3, Domain::Test, 0, 0);
        let mut s: Vec<i32> = m.sample(3, &mut rng).into_iter().copied().collect();
        s.sort();
        assert_eq!(s, vec![2, 3, 4]);
    }

    #[test]
    fn zero_gamma_target_is_reward() {
        let mut rng = stream(4, Domain::Test, 0, 0);
        let q = DuelingQ::new(2, &[4], 3, &mut rng);
        let e = Experience { obs: vec![0.1, 0.2], action: 1, reward: 0.7, next_obs: vec![0.3, 0.4] };
        assert_eq!(d3qn_targets(&q, &q, &[&e], 0.0), vec![0.7]);
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let mut rng = stream(5, Domain::Test, 0, 0);
        let mut online = DuelingQ::new(2, &[3], 2, &mut rng);
        let target = DuelingQ::new(2, &[3], 2, &mut rng);
        let data: Vec<Experience> = (0..6)
            .map(|i| Experience {
                obs: vec![(i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()],
                action: i % 2,
                reward: i as f64 * 0.2 - 0.5,
                next_obs: vec![(i as f64 * 0.3).cos(), (i as f64 * 0.9).sin()],
            })
            .collect();
        let batch: Vec<&Experience> = data.iter().collect();
        // The target is held fixed, as in the semi-gradient update.
        let y = d3qn_targets(&online, &target, &batch, 0.5);
        let (_, grad) = d3qn_loss(&online, &target, &batch, 0.5);
        let p0 = online.net.params().to_vec();
        let fixed_loss = |net: &DuelingQ| {
            data.iter().zip(&y).map(|(e, yj)| (net.q_one(&e.obs)[e.action] - yj).powi(2)).sum::<f64>() / (2.0 * data.len() as f64)
        };
        for i in 0..p0.len() {
            online.net.params_mut()[i] = p0[i] + 1e-6;
            let up = fixed_loss(&online);
            online.net.params_mut()[i] = p0[i] - 1e-6;
            let dn = fixed_loss(&online);
            online.net.params_mut()[i] = p0[i];
            let fd = (up - dn) / 2e-6;
            let err = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6);
            assert!(err < 1e-4, "param {i}: {fd} vs {}", grad[i]);
        }
    }
}
