//! Critic and policy losses with analytic gradients.

use ndarray::{Array2, ArrayView2};

use super::mlp::Mlp;
use super::policy::{kl, log_prob, GaussianPolicy};

/// Mean over rows of the squared error summed over outputs. Returns the loss
/// and its gradient with respect to the network parameters.
pub fn value_loss(net: &Mlp, obs: ArrayView2<f64>, targets: ArrayView2<f64>) -> (f64, Vec<f64>) {
    let tape = net.forward_tape(obs);
    let b = obs.nrows().max(1) as f64;
    let diff = tape.output() - &targets;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / b;
    let gout = diff.mapv(|d| 2.0 * d / b);
    let mut grad = vec![0.0; net.num_params()];
    net.backward(&tape, gout.view(), &mut grad);
    (loss, grad)
}

/// Per-sample derivatives of a policy loss with respect to the Gaussian's
/// mean and log-std, pushed back into a flat gradient over
/// `GaussianPolicy::flat_params`.
fn policy_gradient(policy: &GaussianPolicy, tape: &super::mlp::Tape, dmean: &Array2<f64>, dlog_std: &[f64]) -> Vec<f64> {
    let np = policy.net.num_params();
    let mut grad = vec![0.0; policy.num_params()];
    policy.net.backward(tape, dmean.view(), &mut grad[..np]);
    for (g, d) in grad[np..].iter_mut().zip(dlog_std) {
        *g += d;
    }
    grad
}

/// Adds `w * d log pi(a|o) / d(mean, log_std)` for one sample.
fn add_log_prob_grad(mean: &[f64], log_std: &[f64], action: &[f64], w: f64, dmean: &mut [f64], dlog_std: &mut [f64]) {
    for d in 0..mean.len() {
        let var = (2.0 * log_std[d]).exp();
        let diff = action[d] - mean[d];
        dmean[d] += w * diff / var;
        dlog_std[d] += w * (diff * diff / var - 1.0);
    }
}

/// Negative mean clipped surrogate. `old_log_probs` are under the policy
/// stored before the improvement step.
pub fn improve_loss(
    policy: &GaussianPolicy,
    obs: ArrayView2<f64>,
    actions: ArrayView2<f64>,
    old_log_probs: &[f64],
    advantages: &[f64],
    clip_eps: f64,
) -> (f64, Vec<f64>) {
    let tape = policy.net.forward_tape(obs);
    let means = tape.output();
    let b = obs.nrows();
    let bf = b.max(1) as f64;
    let dim = policy.action_dim();
    let mut dmean = Array2::zeros((b, dim));
    let mut dls = vec![0.0; dim];
    let mut loss = 0.0;
    for j in 0..b {
        let m = means.row(j).to_vec();
        let a = actions.row(j).to_vec();
        let ratio = (log_prob(&m, &policy.log_std, &a) - old_log_probs[j]).exp();
        let adv = advantages[j];
        let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps);
        let (unclipped_term, clipped_term) = (ratio * adv, clipped * adv);
        if unclipped_term <= clipped_term {
            loss -= unclipped_term / bf;
            let mut row = vec![0.0; dim];
            add_log_prob_grad(&m, &policy.log_std, &a, -ratio * adv / bf, &mut row, &mut dls);
            for d in 0..dim {
                dmean[(j, d)] = row[d];
            }
        } else {
            loss -= clipped_term / bf;
        }
    }
    let grad = policy_gradient(policy, &tape, &dmean, &dls);
    (loss, grad)
}

/// Projection loss: mean of `KL(pi || pi_ref)` plus the cost-weighted
/// importance ratio against the policy before improvement. `cost_adv` has one
/// column per constraint and `factor` is `(1 - gamma lambda) / (1 - gamma)`.
#[allow(clippy::too_many_arguments)]
pub fn project_loss(
    policy: &GaussianPolicy,
    reference: &GaussianPolicy,
    obs: ArrayView2<f64>,
    actions: ArrayView2<f64>,
    old_log_probs: &[f64],
    cost_adv: ArrayView2<f64>,
    nu: &[f64],
    factor: f64,
) -> (f64, Vec<f64>) {
    let tape = policy.net.forward_tape(obs);
    let means = tape.output();
    let ref_means = reference.means(obs);
    let b = obs.nrows();
    let bf = b.max(1) as f64;
    let dim = policy.action_dim();
    let mut dmean = Array2::zeros((b, dim));
    let mut dls = vec![0.0; dim];
    let mut loss = 0.0;
    for j in 0..b {
        let m = means.row(j).to_vec();
        let mr = ref_means.row(j).to_vec();
        let a = actions.row(j).to_vec();
        loss += kl(&m, &policy.log_std, &mr, &reference.log_std) / bf;
        let mut row = vec![0.0; dim];
        for d in 0..dim {
            let vr = (2.0 * reference.log_std[d]).exp();
            row[d] += (m[d] - mr[d]) / vr / bf;
            dls[d] += ((2.0 * policy.log_std[d]).exp() / vr - 1.0) / bf;
        }
        let weighted: f64 = nu.iter().zip(cost_adv.row(j)).map(|(n, c)| n * c).sum();
        if weighted != 0.0 {
            let ratio = (log_prob(&m, &policy.log_std, &a) - old_log_probs[j]).exp();
            loss += factor * ratio * weighted / bf;
            add_log_prob_grad(&m, &policy.log_std, &a, factor * ratio * weighted / bf, &mut row, &mut dls);
        }
        for d in 0..dim {
            dmean[(j, d)] = row[d];
        }
    }
    let grad = policy_gradient(policy, &tape, &dmean, &dls);
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::mlp::Activation;
    use crate::rng::{stream, Domain};
    use rand::Rng;

    fn toy_policy(seed: u64) -> GaussianPolicy {
        let mut rng = stream(seed, Domain::Test, 1, 0);
        let mut p = GaussianPolicy::new(3, &[2], 2, -1.0, &mut rng);
        for v in p.net.params_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        p.log_std = vec![-0.7, -1.2];
        p
    }

    fn fd_check(params: Vec<f64>, grad: &[f64], mut f: impl FnMut(&[f64]) -> f64) {
        for i in 0..params.len() {
            let mut up = params.clone();
            up[i] += 1e-6;
            let mut dn = params.clone();
            dn[i] -= 1e-6;
            let fd = (f(&up) - f(&dn)) / 2e-6;
            let err = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6);
            assert!(err < 1e-4, "param {i}: fd {fd} analytic {}", grad[i]);
        }
    }

    fn batch(seed: u64, b: usize, cols: usize) -> Array2<f64> {
        let mut rng = stream(seed, Domain::Test, 2, cols as u64);
        Array2::from_shape_fn((b, cols), |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn value_loss_offset_and_gradient() {
        let mut rng = stream(5, Domain::Test, 0, 0);
        let mut net = Mlp::orthogonal(&[3, 2, 1], &[Activation::Tanh, Activation::Identity], &[1.0, 1.0], &mut rng);
        let obs = batch(1, 4, 3);
        let out = net.forward(obs.view());
        let (loss, _) = value_loss(&net, obs.view(), out.mapv(|v| v + 0.25).view());
        assert!((loss - 0.0625).abs() < 1e-14);
        let targets = batch(2, 4, 1);
        let (_, grad) = value_loss(&net, obs.view(), targets.view());
        let p0 = net.params().to_vec();
        fd_check(p0, &grad, |p| {
            net.params_mut().copy_from_slice(p);
            value_loss(&net, obs.view(), targets.view()).0
        });
    }

    #[test]
    fn improve_loss_unit_ratio_is_negative_mean_advantage() {
        let pol = toy_policy(1);
        let obs = batch(3, 5, 3);
        let acts = batch(4, 5, 2).mapv(|v| 0.5 + 0.3 * v);
        let old = pol.log_probs(obs.view(), acts.view());
        let adv = [0.5, -1.0, 2.0, 0.0, 0.1];
        let (loss, _) = improve_loss(&pol, obs.view(), acts.view(), &old, &adv, 0.02);
        assert!((loss + adv.iter().sum::<f64>() / 5.0).abs() < 1e-12);
        let (zero, _) = improve_loss(&pol, obs.view(), acts.view(), &old, &[0.0; 5], 0.02);
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn improve_loss_gradient() {
        let mut pol = toy_policy(2);
        let obs = batch(5, 6, 3);
        let acts = batch(6, 6, 2).mapv(|v| 0.5 + 0.4 * v);
        // Old log-probs shifted so ratios sit well away from the clip kinks.
        let old: Vec<f64> = pol.log_probs(obs.view(), acts.view()).iter().enumerate().map(|(i, l)| l + [0.3, -0.3, 0.2, -0.25, 0.0, 0.4][i]).collect();
        let adv = [1.0, -0.5, 0.7, 1.3, -2.0, -0.4];
        let (_, grad) = improve_loss(&pol, obs.view(), acts.view(), &old, &adv, 0.1);
        let p0 = pol.flat_params();
        fd_check(p0, &grad, |p| {
            pol.set_flat_params(p);
            improve_loss(&pol, obs.view(), acts.view(), &old, &adv, 0.1).0
        });
    }

    #[test]
    fn project_loss_zero_at_reference_and_gradient() {
        let mut pol = toy_policy(3);
        let obs = batch(7, 5, 3);
        let acts = batch(8, 5, 2).mapv(|v| 0.5 + 0.4 * v);
        let old = pol.log_probs(obs.view(), acts.view());
        let cadv = batch(9, 5, 2);
        let (l0, _) = project_loss(&pol, &pol.clone(), obs.view(), acts.view(), &old, cadv.view(), &[0.0, 0.0], 1.9);
        assert!(l0.abs() < 1e-15);
        let reference = toy_policy(4);
        let (_, grad) = project_loss(&pol, &reference, obs.view(), acts.view(), &old, cadv.view(), &[0.7, 1.4], 1.9);
        let p0 = pol.flat_params();
        fd_check(p0, &grad, |p| {
            pol.set_flat_params(p);
            project_loss(&pol, &reference, obs.view(), acts.view(), &old, cadv.view(), &[0.7, 1.4], 1.9).0
        });
    }

    #[test]
    fn project_loss_without_cost_is_pure_kl() {
        let pol = toy_policy(5);
        let reference = toy_policy(6);
        let obs = batch(10, 4, 3);
        let acts = batch(11, 4, 2);
        let old = pol.log_probs(obs.view(), acts.view());
        let zeros = Array2::zeros((4, 1));
        let (l, _) = project_loss(&pol, &reference, obs.view(), acts.view(), &old, zeros.view(), &[3.0], 1.9);
        assert!((l - pol.mean_kl(&reference, obs.view())).abs() < 1e-14);
    }
}
