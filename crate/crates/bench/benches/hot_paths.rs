use std::path::Path;

use catn_bench::instance;
use catn_core::learn::{Activation, Mlp};
use catn_core::optim::{wmmse_cbf, WmmseConfig, WmmseProblem};
use catn_core::rng::{stream, Domain};
use catn_core::sim::{Mode, RunConfig, Scenario, Simulation};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ndarray::Array2;

fn wmmse(c: &mut Criterion) {
    let x = instance(3, 6, 4, 1, 1);
    let p = WmmseProblem { assoc: &x.assoc, tu: &x.tu, au: &x.au, sigma2: &x.sigma2, p_max: 20.0, i_max: 1.6e-13 };
    c.bench_function("wmmse_n3_k6_m4", |b| b.iter(|| wmmse_cbf(&p, None, &WmmseConfig::default()).unwrap()));
}

fn mlp_forward(c: &mut Criterion) {
    let mut rng = stream(1, Domain::Test, 0, 0);
    let acts = [Activation::Relu, Activation::Relu, Activation::Sigmoid, Activation::Sigmoid];
    let net = Mlp::orthogonal(&[600, 512, 128, 64, 40], &acts, &[1.0; 4], &mut rng);
    let obs = Array2::from_elem((64, 600), 0.1);
    c.bench_function("mlp_forward_batch64", |b| b.iter(|| net.forward(obs.view())));
}

fn slot_step(c: &mut Criterion) {
    let scenario = Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/tiny.toml")).unwrap();
    let mut group = c.benchmark_group("slot_step_tiny");
    for scheme in ["d3qn-cup", "dcd-wmmse"] {
        group.bench_function(scheme, |b| {
            b.iter_batched(
                || {
                    let cfg = RunConfig { scheme: scheme.parse().unwrap(), mode: Mode::Train, seed: 1, record_events: false };
                    Simulation::new(scenario.clone(), cfg, None).unwrap()
                },
                |mut sim| {
                    for _ in 0..10 {
                        sim.step().unwrap();
                    }
                },
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, wmmse, mlp_forward, slot_step);
criterion_main!(benches);
