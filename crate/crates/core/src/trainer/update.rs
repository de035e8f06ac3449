use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::adam::{clip_grad_norm, Adam};
use super::buffer::RolloutBuffer;
use super::config::TrainConfig;
use super::loss::{build_loss, loss_stats, normalize_advantages, LossStats, Minibatch};
use super::TrainError;
use crate::policy::{Graph, PolicyParams, ACTION_DIM};

/// Means over every minibatch of one update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub consistency_loss: f64,
    pub total_loss: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub grad_norm: f64,
}

pub fn minibatch(buffer: &RolloutBuffer, rows: &[usize]) -> Minibatch {
    let n = rows.len();
    let mut advantages: Vec<f64> = rows.iter().map(|&i| buffer.advantages[i]).collect();
    normalize_advantages(&mut advantages);
    Minibatch {
        obs: buffer.obs_rows(rows),
        actions: Array2::from_shape_fn((n, ACTION_DIM), |(k, j)| buffer.actions[rows[k]][j]),
        old_log_probs: Array2::from_shape_fn((n, 1), |(k, _)| buffer.log_probs[rows[k]]),
        advantages: Array2::from_shape_vec((n, 1), advantages).expect("column"),
        returns: Array2::from_shape_fn((n, 1), |(k, _)| buffer.returns[rows[k]]),
        meta: rows.iter().map(|&i| buffer.meta[i].index()).collect(),
    }
}

/// Gradients of the total loss in parameter storage order, plus loss stats.
pub fn loss_gradients(
    params: &PolicyParams,
    batch: &Minibatch,
    config: &TrainConfig,
) -> Result<(Vec<Array2<f64>>, LossStats), TrainError> {
    let mut g = Graph::new();
    let vars = build_loss(&mut g, params, batch, config)?;
    let stats = loss_stats(&g, &vars, config.clip_range);
    if !stats.total.is_finite() {
        return Err(TrainError::NonFiniteLoss(format!("{stats:?}")));
    }
    let mut grads: Vec<Array2<f64>> = params.tensors().iter().map(|t| Array2::zeros(t.dim())).collect();
    for (id, grad) in g.backward(vars.total)? {
        grads[id] += &grad;
    }
    Ok((grads, stats))
}

/// `n_epochs` passes of shuffled minibatches over a finished buffer.
pub fn update(
    params: &mut PolicyParams,
    adam: &mut Adam,
    buffer: &RolloutBuffer,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateStats, TrainError> {
    if !buffer.is_finished() {
        return Err(TrainError::InvalidConfig("buffer has no advantages yet".into()));
    }
    let mut indices: Vec<usize> = (0..buffer.len()).collect();
    let mut acc = UpdateStats::default();
    let mut batches = 0usize;
    for epoch in 0..config.n_epochs {
        indices.shuffle(rng);
        for (k, rows) in indices.chunks(config.minibatch_size).enumerate() {
            let batch = minibatch(buffer, rows);
            let (mut grads, s) = loss_gradients(params, &batch, config).map_err(|e| match e {
                TrainError::NonFiniteLoss(d) => TrainError::NonFiniteLoss(format!("epoch {epoch} minibatch {k}: {d}")),
                other => other,
            })?;
            let norm = clip_grad_norm(&mut grads, config.max_grad_norm);
            adam.update(params.tensors_mut(), &grads, config.learning_rate);
            params.clamp_log_std();
            acc.policy_loss += s.policy;
            acc.value_loss += s.value;
            acc.entropy += s.entropy;
            acc.consistency_loss += s.consistency;
            acc.total_loss += s.total;
            acc.clip_fraction += s.clip_fraction;
            acc.approx_kl += s.approx_kl;
            acc.grad_norm += norm;
            batches += 1;
        }
    }
    if !params.is_finite() {
        return Err(TrainError::NonFiniteLoss("parameters became non-finite".into()));
    }
    let n = batches as f64;
    Ok(UpdateStats {
        policy_loss: acc.policy_loss / n,
        value_loss: acc.value_loss / n,
        entropy: acc.entropy / n,
        consistency_loss: acc.consistency_loss / n,
        total_loss: acc.total_loss / n,
        clip_fraction: acc.clip_fraction / n,
        approx_kl: acc.approx_kl / n,
        grad_norm: acc.grad_norm / n,
    })
}
