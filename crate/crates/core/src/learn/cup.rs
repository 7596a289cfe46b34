//! Constrained update projection and the penalty-PPO baseline.

use log::warn;
use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::gae::{gae, td_residuals};
use super::losses::{improve_loss, project_loss, value_loss};
use super::mlp::{Activation, Mlp};
use super::policy::GaussianPolicy;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CupHyper {
    pub gamma: f64,
    pub lambda: f64,
    pub alpha_nu: f64,
    pub lr_value: f64,
    pub lr_policy: f64,
    pub nu_init: f64,
    pub nu_max: f64,
    pub cost_limit: f64,
    /// KL bound for early stopping, also used as the surrogate clip range.
    pub kl_eps: f64,
    pub minibatch: usize,
    pub epochs: usize,
    pub buffer_len: usize,
    pub log_std_init: f64,
}

impl Default for CupHyper {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            lambda: 0.1,
            alpha_nu: 0.06,
            lr_value: 3e-4,
            lr_policy: 3e-4,
            nu_init: 1.0,
            nu_max: 10.0,
            cost_limit: 0.0,
            kl_eps: 0.02,
            minibatch: 10,
            epochs: 20,
            buffer_len: 50,
            log_std_init: -1.0,
        }
    }
}

impl CupHyper {
    /// `(1 - gamma lambda) / (1 - gamma)`.
    pub fn projection_factor(&self) -> f64 {
        (1.0 - self.gamma * self.lambda) / (1.0 - self.gamma)
    }
}

/// `clip(nu + alpha (J_C - b), 0, nu_max)` elementwise.
pub fn update_nu(nu: &[f64], alpha_nu: f64, j_c: &[f64], b: f64, nu_max: f64) -> Vec<f64> {
    nu.iter().zip(j_c).map(|(n, j)| (n + alpha_nu * (j - b)).clamp(0.0, nu_max)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub cost: Vec<f64>,
}

/// Fixed-capacity on-policy trajectory collector.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryBuffer {
    capacity: usize,
    items: Vec<Transition>,
}

impl TrajectoryBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, items: Vec::with_capacity(capacity) }
    }

    pub fn push(&mut self, t: Transition) {
        assert!(!self.is_full(), "trajectory buffer overflow");
        self.items.push(t);
    }

    pub fn is_full(&self) -> bool {
        self.items.len() >= self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn items(&self) -> &[Transition] {
        &self.items
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }
}

/// Policy, reward critic and (for constrained learning) a cost critic with
/// one output per constraint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub policy: GaussianPolicy,
    pub value: Mlp,
    pub cost_value: Option<Mlp>,
    pub opt_policy: Adam,
    pub opt_value: Adam,
    pub opt_cost: Option<Adam>,
    pub nu: Vec<f64>,
}

fn critic<R: Rng + ?Sized>(obs_dim: usize, hidden: &[usize], out: usize, rng: &mut R) -> Mlp {
    let mut sizes = vec![obs_dim];
    sizes.extend_from_slice(hidden);
    sizes.push(out);
    let mut acts = vec![Activation::Relu; hidden.len()];
    acts.push(Activation::Identity);
    let mut gains = vec![2f64.sqrt(); hidden.len()];
    gains.push(1.0);
    Mlp::orthogonal(&sizes, &acts, &gains, rng)
}

impl ActorCritic {
    /// `num_costs = 0` builds an unconstrained agent without a cost critic.
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, action_dim: usize, num_costs: usize, hidden: &[usize], hyper: &CupHyper, rng: &mut R) -> Self {
        let policy = GaussianPolicy::new(obs_dim, hidden, action_dim, hyper.log_std_init, rng);
        let value = critic(obs_dim, hidden, 1, rng);
        let cost_value = (num_costs > 0).then(|| critic(obs_dim, hidden, num_costs, rng));
        Self {
            opt_policy: Adam::new(policy.num_params(), hyper.lr_policy),
            opt_value: Adam::new(value.num_params(), hyper.lr_value),
            opt_cost: cost_value.as_ref().map(|c| Adam::new(c.num_params(), hyper.lr_value)),
            policy,
            value,
            cost_value,
            nu: vec![hyper.nu_init; num_costs],
        }
    }

    fn step_policy(&mut self, grad: &[f64]) {
        let mut p = self.policy.flat_params();
        self.opt_policy.step(&mut p, grad);
        self.policy.set_flat_params(&p);
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub improve_epochs: usize,
    pub project_epochs: usize,
    pub final_kl: f64,
    pub value_loss: f64,
    pub nu: Vec<f64>,
    pub aborted: bool,
}

struct Prepared {
    obs: Array2<f64>,
    actions: Array2<f64>,
    adv: Vec<f64>,
    v_target: Array2<f64>,
    cost_adv: Array2<f64>,
    c_target: Array2<f64>,
    mean_cost: Vec<f64>,
}

fn rows(data: impl Iterator<Item = Vec<f64>>, n: usize, dim: usize) -> Array2<f64> {
    let flat: Vec<f64> = data.flat_map(|v| {
        assert_eq!(v.len(), dim, "ragged batch");
        v
    })
    .collect();
    Array2::from_shape_vec((n, dim), flat).expect("batch shape")
}

fn prepare(ac: &ActorCritic, items: &[Transition], hyper: &CupHyper) -> Prepared {
    let b = items.len();
    let od = items[0].obs.len();
    let obs = rows(items.iter().map(|t| t.obs.clone()), b, od);
    let next = rows(items.iter().map(|t| t.next_obs.clone()), b, od);
    let actions = rows(items.iter().map(|t| t.action.clone()), b, items[0].action.len());
    let v = ac.value.forward(obs.view()).column(0).to_vec();
    let nv = ac.value.forward(next.view()).column(0).to_vec();
    let rewards: Vec<f64> = items.iter().map(|t| t.reward).collect();
    let adv = gae(&td_residuals(&rewards, &v, &nv, hyper.gamma), hyper.gamma, hyper.lambda);
    let v_target = Array2::from_shape_fn((b, 1), |(i, _)| adv[i] + v[i]);

    let nc = ac.nu.len();
    let mut cost_adv = Array2::zeros((b, nc));
    let mut c_target = Array2::zeros((b, nc));
    let mut mean_cost = vec![0.0; nc];
    if let Some(cv) = &ac.cost_value {
        let vc = cv.forward(obs.view());
        let nvc = cv.forward(next.view());
        for l in 0..nc {
            let costs: Vec<f64> = items.iter().map(|t| t.cost[l]).collect();
            mean_cost[l] = costs.iter().sum::<f64>() / b as f64;
            let col_v = vc.column(l).to_vec();
            let a = gae(&td_residuals(&costs, &col_v, &nvc.column(l).to_vec(), hyper.gamma), hyper.gamma, hyper.lambda);
            for i in 0..b {
                cost_adv[(i, l)] = a[i];
                c_target[(i, l)] = a[i] + col_v[i];
            }
        }
    }
    Prepared { obs, actions, adv, v_target, cost_adv, c_target, mean_cost }
}

fn minibatches<R: Rng + ?Sized>(n: usize, size: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.chunks(size.max(1)).map(|c| c.to_vec()).collect()
}

/// Improvement epochs shared by CUP and PPO. Returns the number of epochs run
/// and the last critic loss, or `None` on a non-finite loss.
fn improvement_step<R: Rng + ?Sized>(
    ac: &mut ActorCritic,
    data: &Prepared,
    old: &GaussianPolicy,
    old_logp: &[f64],
    hyper: &CupHyper,
    rng: &mut R,
) -> Option<(usize, f64)> {
    let mut last_loss = 0.0;
    for epoch in 1..=hyper.epochs {
        for mb in minibatches(data.obs.nrows(), hyper.minibatch, rng) {
            let o = data.obs.select(Axis(0), &mb);
            let a = data.actions.select(Axis(0), &mb);
            let vt = data.v_target.select(Axis(0), &mb);
            let (lv, gv) = value_loss(&ac.value, o.view(), vt.view());
            if !lv.is_finite() {
                return None;
            }
            last_loss = lv;
            ac.opt_value.step(ac.value.params_mut(), &gv);
            if let (Some(cv), Some(opt)) = (ac.cost_value.as_mut(), ac.opt_cost.as_mut()) {
                let ct = data.c_target.select(Axis(0), &mb);
                let (lc, gc) = value_loss(cv, o.view(), ct.view());
                if !lc.is_finite() {
                    return None;
                }
                opt.step(cv.params_mut(), &gc);
            }
            let adv: Vec<f64> = mb.iter().map(|&i| data.adv[i]).collect();
            let olp: Vec<f64> = mb.iter().map(|&i| old_logp[i]).collect();
            let (lp, gp) = improve_loss(&ac.policy, o.view(), a.view(), &olp, &adv, hyper.kl_eps);
            if !lp.is_finite() || gp.iter().any(|g| !g.is_finite()) {
                return None;
            }
            ac.step_policy(&gp);
        }
        if ac.policy.mean_kl(old, data.obs.view()) > hyper.kl_eps {
            return Some((epoch, last_loss));
        }
    }
    Some((hyper.epochs, last_loss))
}

/// One constrained update on a full trajectory buffer. On a non-finite loss
/// the agent is restored to its pre-update state.
pub fn cup_update<R: Rng + ?Sized>(ac: &mut ActorCritic, items: &[Transition], hyper: &CupHyper, rng: &mut R) -> UpdateStats {
    assert!(ac.cost_value.is_some(), "constrained update needs a cost critic");
    if items.is_empty() {
        return UpdateStats { nu: ac.nu.clone(), ..Default::default() };
    }
    let backup = ac.clone();
    let data = prepare(ac, items, hyper);
    ac.nu = update_nu(&ac.nu, hyper.alpha_nu, &data.mean_cost, hyper.cost_limit, hyper.nu_max);

    let old = ac.policy.clone();
    let old_logp = old.log_probs(data.obs.view(), data.actions.view());
    let Some((improve_epochs, value_loss)) = improvement_step(ac, &data, &old, &old_logp, hyper, rng) else {
        return abort(ac, backup);
    };

    let reference = ac.policy.clone();
    let factor = hyper.projection_factor();
    let mut project_epochs = hyper.epochs;
    for epoch in 1..=hyper.epochs {
        for mb in minibatches(data.obs.nrows(), hyper.minibatch, rng) {
            let o = data.obs.select(Axis(0), &mb);
            let a = data.actions.select(Axis(0), &mb);
            let ca = data.cost_adv.select(Axis(0), &mb);
            let olp: Vec<f64> = mb.iter().map(|&i| old_logp[i]).collect();
            let (l, g) = project_loss(&ac.policy, &reference, o.view(), a.view(), &olp, ca.view(), &ac.nu, factor);
            if !l.is_finite() || g.iter().any(|x| !x.is_finite()) {
                return abort(ac, backup);
            }
            ac.step_policy(&g);
        }
        if ac.policy.mean_kl(&old, data.obs.view()) > hyper.kl_eps {
            project_epochs = epoch;
            break;
        }
    }
    UpdateStats {
        improve_epochs,
        project_epochs,
        final_kl: ac.policy.mean_kl(&old, data.obs.view()),
        value_loss,
        nu: ac.nu.clone(),
        aborted: false,
    }
}

/// Improvement step only, on whatever rewards the buffer holds (the caller
/// stores penalised rewards).
pub fn ppo_update<R: Rng + ?Sized>(ac: &mut ActorCritic, items: &[Transition], hyper: &CupHyper, rng: &mut R) -> UpdateStats {
    if items.is_empty() {
        return UpdateStats::default();
    }
    let backup = ac.clone();
    let data = prepare(ac, items, hyper);
    let old = ac.policy.clone();
    let old_logp = old.log_probs(data.obs.view(), data.actions.view());
    let Some((improve_epochs, value_loss)) = improvement_step(ac, &data, &old, &old_logp, hyper, rng) else {
        return abort(ac, backup);
    };
    UpdateStats {
        improve_epochs,
        project_epochs: 0,
        final_kl: ac.policy.mean_kl(&old, data.obs.view()),
        value_loss,
        nu: ac.nu.clone(),
        aborted: false,
    }
}

fn abort(ac: &mut ActorCritic, backup: ActorCritic) -> UpdateStats {
    warn!("non-finite loss during policy update; parameters restored");
    *ac = backup;
    UpdateStats { nu: ac.nu.clone(), aborted: true, ..Default::default() }
}
