use std::hint::black_box;
use std::sync::Arc;

use covlm_core::advisor::{oracle_dialogue, OracleParams, PlanRules};
use covlm_core::mdpcore::{build_observation, DrivingEnv, EnvConfig, OBS_DIM};
use covlm_core::policy::{PolicyParams, PolicyShape};
use covlm_core::simworld::{step_dynamics, BundledMap, Control, EgoState, VehicleParams};
use covlm_core::trainer::{compute_gae, loss_gradients, Minibatch, Preset};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ndarray::Array2;

fn batch(n: usize) -> Minibatch {
    let f = |i: usize, j: usize| ((i * 31 + j * 17) % 97) as f64 / 97.0 - 0.5;
    Minibatch {
        obs: Array2::from_shape_fn((n, OBS_DIM), |(i, j)| f(i, j)),
        actions: Array2::from_shape_fn((n, 2), |(i, j)| f(i, j + 3)),
        old_log_probs: Array2::from_elem((n, 1), -1.5),
        advantages: Array2::from_shape_fn((n, 1), |(i, _)| f(i, 7)),
        returns: Array2::from_shape_fn((n, 1), |(i, _)| f(i, 9)),
        meta: (0..n).map(|i| i % 5).collect(),
    }
}

fn policy(c: &mut Criterion) {
    let params = PolicyParams::init(PolicyShape::default(), 0).unwrap();
    let config = Preset::Desk.train_config();
    let b = batch(config.minibatch_size);
    c.bench_function("policy/forward_single", |bench| {
        let obs = vec![0.1; OBS_DIM];
        bench.iter(|| params.forward(black_box(&obs)).unwrap())
    });
    c.bench_function("policy/loss_and_gradients_256", |bench| {
        bench.iter(|| loss_gradients(black_box(&params), black_box(&b), &config).unwrap())
    });
}

fn simulation(c: &mut Criterion) {
    let vp = VehicleParams::default();
    let ego = EgoState {
        speed: 6.0,
        ..EgoState::default()
    };
    c.bench_function("sim/step_dynamics", |bench| {
        bench.iter(|| step_dynamics(black_box(&ego), Control::new(0.3, 0.1), 0.05, &vp).unwrap())
    });
    let map = Arc::new(BundledMap::Seen.load());
    c.bench_function("sim/env_step", |bench| {
        bench.iter_batched(
            || DrivingEnv::new(Arc::clone(&map), EnvConfig::default(), 1).unwrap(),
            |mut env| {
                for _ in 0..100 {
                    env.step(Control::new(0.3, 0.0)).unwrap();
                }
                env
            },
            BatchSize::SmallInput,
        )
    });
}

fn trainer(c: &mut Criterion) {
    let n = 1024;
    let rewards: Vec<f64> = (0..n).map(|i| (i % 7) as f64 * 0.3).collect();
    let values: Vec<f64> = (0..n).map(|i| (i % 5) as f64 * 0.2).collect();
    let dones: Vec<bool> = (0..n).map(|i| i % 200 == 199).collect();
    c.bench_function("trainer/gae_1024", |bench| {
        bench.iter(|| compute_gae(black_box(&rewards), &values, &dones, 0.5, 0.98, 0.95).unwrap())
    });
}

fn advisor(c: &mut Criterion) {
    let mut env = DrivingEnv::new(Arc::new(BundledMap::Unseen.load()), EnvConfig::default(), 3).unwrap();
    for _ in 0..60 {
        env.step(Control::new(0.4, 0.0)).unwrap();
    }
    let snap = env.snapshot().clone();
    let params = OracleParams::default();
    c.bench_function("advisor/oracle_dialogue", |bench| {
        bench.iter(|| oracle_dialogue(black_box(&snap), &params, PlanRules::Full).unwrap())
    });
    c.bench_function("mdp/build_observation", |bench| {
        bench.iter(|| build_observation(black_box(&snap), covlm_core::advisor::MetaAction::Idle).unwrap())
    });
}

criterion_group!(benches, policy, simulation, trainer, advisor);
criterion_main!(benches);
