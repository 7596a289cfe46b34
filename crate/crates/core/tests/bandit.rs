use catn_core::learn::{clip_action, cup_update, ppo_update, ActorCritic, CupHyper, Transition};
use catn_core::rng::{stream, Domain};

/// Safe arm (a < 0.5): reward 1, cost -0.5. Unsafe arm: reward 2, cost 1.
fn pull(a: f64) -> (f64, f64) {
    if a < 0.5 {
        (1.0, -0.5)
    } else {
        (2.0, 1.0)
    }
}

enum Mode {
    Cup,
    CupNoCost,
    Ppo,
}

/// Returns the final policy mean and a Monte-Carlo estimate of the mean cost.
fn train(mode: Mode, seed: u64) -> (f64, f64) {
    let mut hyper = CupHyper { lr_policy: 3e-3, lr_value: 3e-3, ..Default::default() };
    if let Mode::CupNoCost = mode {
        hyper.nu_init = 0.0;
        hyper.alpha_nu = 0.0;
    }
    let mut rng = stream(seed, Domain::Test, 7, 0);
    let mut ac = ActorCritic::new(1, 1, 1, &[16, 8], &hyper, &mut rng);
    let obs = vec![1.0];
    let draw = |ac: &ActorCritic, rng: &mut _| {
        let raw = ac.policy.sample(&obs, rng);
        let (r, c) = pull(clip_action(&raw)[0]);
        Transition { obs: obs.clone(), action: raw, reward: r, next_obs: obs.clone(), cost: vec![c] }
    };
    for _ in 0..200 {
        let batch: Vec<Transition> = (0..hyper.buffer_len).map(|_| draw(&ac, &mut rng)).collect();
        match mode {
            Mode::Ppo => ppo_update(&mut ac, &batch, &hyper, &mut rng),
            _ => cup_update(&mut ac, &batch, &hyper, &mut rng),
        };
    }
    let cost = (0..2000).map(|_| draw(&ac, &mut rng).cost[0]).sum::<f64>() / 2000.0;
    (ac.policy.mean_one(&obs)[0], cost)
}

#[test]
fn constrained_learner_settles_on_safe_arm() {
    for seed in 0..2 {
        let (mean, cost) = train(Mode::Cup, seed);
        assert!(mean < 0.5, "seed {seed}: mean {mean}");
        assert!(cost <= 0.0, "seed {seed}: cost {cost}");
    }
}

#[test]
fn zero_multiplier_ablation_takes_unsafe_arm() {
    let (mean, cost) = train(Mode::CupNoCost, 0);
    assert!(mean > 0.5, "mean {mean}");
    assert!(cost > 0.0);
}

#[test]
fn ppo_learns_reward_maximising_arm() {
    let (mean, _) = train(Mode::Ppo, 0);
    assert!(mean > 0.5, "mean {mean}");
}
