use covlm_core::advisor::{MetaAction, EMBEDDINGS};
use covlm_core::policy::{PolicyParams, PolicyShape};
use covlm_core::trainer::{
    build_loss, compute_gae, evaluate_loss, update, Adam, Minibatch, Preset, RolloutBuffer, TrainConfig, Transition,
};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn small_shape(obs_dim: usize) -> PolicyShape {
    PolicyShape {
        obs_dim,
        extractor: 8,
        actor: vec![8],
        critic: vec![8],
    }
}

fn random_batch(params: &PolicyParams, n: usize, rng: &mut ChaCha8Rng) -> Minibatch {
    let dim = params.shape().obs_dim;
    let obs = Array2::from_shape_fn((n, dim), |_| rng.sample(StandardNormal));
    let actions = Array2::from_shape_fn((n, 2), |_| rng.sample::<f64, _>(StandardNormal) * 0.5);
    let mut old = Array2::zeros((n, 1));
    for k in 0..n {
        let (d, _) = params.forward(obs.row(k).as_slice().unwrap()).unwrap();
        old[(k, 0)] = d.log_prob([actions[(k, 0)], actions[(k, 1)]]) + rng.random_range(-0.4..0.4);
    }
    Minibatch {
        obs,
        actions,
        old_log_probs: old,
        advantages: Array2::from_shape_fn((n, 1), |_| rng.sample(StandardNormal)),
        returns: Array2::from_shape_fn((n, 1), |_| rng.sample(StandardNormal)),
        meta: (0..n).map(|_| rng.random_range(0..5)).collect(),
    }
}

/// Per-sample loop version of every loss term.
fn reference_loss(params: &PolicyParams, b: &Minibatch, c: &TrainConfig) -> (f64, f64, f64, f64, f64) {
    let n = b.len() as f64;
    let (mut policy, mut value, mut cons) = (0.0, 0.0, 0.0);
    let mut entropy = 0.0;
    for k in 0..b.len() {
        let (d, v) = params.forward(b.obs.row(k).as_slice().unwrap()).unwrap();
        let a = [b.actions[(k, 0)], b.actions[(k, 1)]];
        let ratio = (d.log_prob(a) - b.old_log_probs[(k, 0)]).exp();
        let adv = b.advantages[(k, 0)];
        let clipped = ratio.clamp(1.0 - c.clip_range, 1.0 + c.clip_range);
        policy -= (ratio * adv).min(clipped * adv) / n;
        value += 0.5 * (v - b.returns[(k, 0)]).powi(2) / n;
        entropy = d.entropy();
        let logits: Vec<f64> = EMBEDDINGS.iter().map(|w| c.temperature * (w[0] * d.mean[0] + w[1] * d.mean[1])).collect();
        let lse = logits.iter().map(|x| x.exp()).sum::<f64>().ln();
        cons += (lse - logits[b.meta[k]]) / n;
    }
    let ppo = policy + value - c.entropy_coef * entropy;
    (policy, value, entropy, cons, ppo)
}

#[test]
fn graph_loss_matches_loop_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..10 {
        let params = PolicyParams::init(small_shape(5), trial).unwrap();
        let batch = random_batch(&params, 12, &mut rng);
        let config = TrainConfig {
            lambda_cons: 0.3,
            temperature: 1.5,
            ..Preset::Desk.train_config()
        };
        let s = evaluate_loss(&params, &batch, &config).unwrap();
        let (policy, value, entropy, cons, ppo) = reference_loss(&params, &batch, &config);
        for (got, want, name) in [
            (s.policy, policy, "policy"),
            (s.value, value, "value"),
            (s.entropy, entropy, "entropy"),
            (s.consistency, cons, "consistency"),
            (s.ppo, ppo, "ppo"),
            (s.total, ppo + 0.3 * cons, "total"),
        ] {
            assert!((got - want).abs() < 1e-10, "trial {trial} {name}: {got} vs {want}");
        }
    }
}

#[test]
fn total_loss_lambda_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let params = PolicyParams::init(small_shape(4), 3).unwrap();
    let batch = random_batch(&params, 10, &mut rng);
    let base = Preset::Desk.train_config();
    let zero = evaluate_loss(&params, &batch, &TrainConfig { lambda_cons: 0.0, ..base.clone() }).unwrap();
    assert_eq!(zero.total.to_bits(), zero.ppo.to_bits());
    for lambda in [0.1, 1.0, 5.0] {
        let s = evaluate_loss(&params, &batch, &TrainConfig { lambda_cons: lambda, ..base.clone() }).unwrap();
        assert_eq!(s.ppo.to_bits(), zero.ppo.to_bits());
        assert!((s.total - (s.ppo + lambda * s.consistency)).abs() < 1e-12);
    }
}

#[test]
fn mismatched_minibatch_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let params = PolicyParams::init(small_shape(4), 3).unwrap();
    let mut batch = random_batch(&params, 6, &mut rng);
    batch.meta.pop();
    let mut g = covlm_core::policy::Graph::new();
    assert!(build_loss(&mut g, &params, &batch, &Preset::Desk.train_config()).is_err());
}

fn bandit_config() -> TrainConfig {
    TrainConfig {
        learning_rate: 3e-3,
        n_steps: 64,
        minibatch_size: 32,
        n_epochs: 4,
        entropy_coef: 0.0,
        lambda_cons: 0.0,
        network: small_shape(3),
        ..Preset::Desk.train_config()
    }
}

/// One-step episodes scored by `reward`; returns the final policy mean.
fn train_bandit(config: &TrainConfig, reward: impl Fn([f64; 2]) -> f64, meta: MetaAction, updates: usize) -> [f64; 2] {
    let mut params = PolicyParams::init(config.network.clone(), 5).unwrap();
    let mut adam = Adam::new(params.tensors().iter().map(|t| t.dim()));
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let obs = [1.0, 0.0, -1.0];
    for _ in 0..updates {
        let mut buffer = RolloutBuffer::new(config.n_steps, obs.len());
        let (dist, value) = params.forward(&obs).unwrap();
        for _ in 0..config.n_steps {
            let a = dist.sample(&mut rng);
            buffer
                .push(Transition {
                    obs: &obs,
                    action: a,
                    log_prob: dist.log_prob(a),
                    value,
                    reward: reward(a),
                    done: true,
                    meta,
                    termination: None,
                })
                .unwrap();
        }
        buffer.finish(0.0, config.gamma, config.gae_lambda).unwrap();
        update(&mut params, &mut adam, &buffer, config, &mut rng).unwrap();
    }
    params.forward(&obs).unwrap().0.mean
}

#[test]
fn bandit_converges_to_reward_peak() {
    let target = [0.5, -0.3];
    let peak = |a: [f64; 2]| -((a[0] - target[0]).powi(2) + (a[1] - target[1]).powi(2));
    let mean = train_bandit(&bandit_config(), peak, MetaAction::Idle, 200);
    assert!((mean[0] - target[0]).abs() < 0.1 && (mean[1] - target[1]).abs() < 0.1, "mean {mean:?}");
}

#[test]
fn consistency_term_pulls_toward_the_advised_direction() {
    // Flat reward: only the consistency term has a preferred direction.
    let config = TrainConfig {
        lambda_cons: 1.0,
        ..bandit_config()
    };
    let flat = |_: [f64; 2]| 0.0;
    let plain = train_bandit(&TrainConfig { lambda_cons: 0.0, ..config.clone() }, flat, MetaAction::Right, 60);
    let guided = train_bandit(&config, flat, MetaAction::Right, 60);
    let right = EMBEDDINGS[MetaAction::Right.index()];
    let dot = |m: [f64; 2]| m[0] * right[0] + m[1] * right[1];
    assert!(dot(guided) > dot(plain) + 0.2, "guided {guided:?} vs plain {plain:?}");
}

proptest! {
    #[test]
    fn gae_lambda_one_is_discounted_return(rewards in prop::collection::vec(-5.0..5.0f64, 1..40), gamma in 0.5..1.0f64) {
        let n = rewards.len();
        let values = vec![0.0; n];
        let mut dones = vec![false; n];
        dones[n - 1] = true;
        let (_, ret) = compute_gae(&rewards, &values, &dones, 123.0, gamma, 1.0).unwrap();
        for t in 0..n {
            let direct: f64 = (t..n).map(|k| gamma.powi((k - t) as i32) * rewards[k]).sum();
            prop_assert!((ret[t] - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn advantage_normalization_is_standard(mut adv in prop::collection::vec(-100.0..100.0f64, 2..64)) {
        prop_assume!(adv.iter().any(|a| (a - adv[0]).abs() > 1e-3));
        covlm_core::trainer::normalize_advantages(&mut adv);
        let n = adv.len() as f64;
        let mean = adv.iter().sum::<f64>() / n;
        let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        prop_assert!(mean.abs() < 1e-9);
        prop_assert!((var - 1.0).abs() < 1e-6);
    }
}
