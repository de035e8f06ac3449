//! Clipped-surrogate PPO loss plus the semantic consistency term.

use ndarray::Array2;

use super::config::TrainConfig;
use super::TrainError;
use crate::advisor::{MetaAction, EMBEDDINGS};
use crate::policy::{entropy_offset, ln_2pi, Graph, PolicyParams, Var, ACTION_DIM};

/// −log softmax(κ·Ωa)_j over the five canonical embeddings.
pub fn consistency_loss(action: [f64; 2], meta_index: usize, temperature: f64) -> Result<f64, TrainError> {
    if meta_index >= MetaAction::COUNT {
        return Err(TrainError::MetaIndex(meta_index));
    }
    let logits: Vec<f64> = EMBEDDINGS
        .iter()
        .map(|w| temperature * (w[0] * action[0] + w[1] * action[1]))
        .collect();
    let m = logits.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let lse = m + logits.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    Ok(lse - logits[meta_index])
}

/// One minibatch as consumed by the loss.
#[derive(Debug, Clone)]
pub struct Minibatch {
    /// (n, obs_dim), already normalized.
    pub obs: Array2<f64>,
    /// (n, 2) pre-squash sampled actions.
    pub actions: Array2<f64>,
    /// (n, 1)
    pub old_log_probs: Array2<f64>,
    /// (n, 1), normalized.
    pub advantages: Array2<f64>,
    /// (n, 1)
    pub returns: Array2<f64>,
    pub meta: Vec<usize>,
}

impl Minibatch {
    pub fn len(&self) -> usize {
        self.obs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Standardizes to mean 0, std 1 (population, ε = 1e-8).
pub fn normalize_advantages(adv: &mut [f64]) {
    let n = adv.len() as f64;
    if adv.is_empty() {
        return;
    }
    let mean = adv.iter().sum::<f64>() / n;
    let std = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    for a in adv {
        *a = (*a - mean) / (std + 1e-8);
    }
}

/// Graph handles of every loss term (all 1×1).
#[derive(Debug, Clone, Copy)]
pub struct LossVars {
    pub policy: Var,
    pub value: Var,
    pub entropy: Var,
    pub consistency: Var,
    /// policy + value − entropy_coef·entropy (the RL part).
    pub ppo: Var,
    pub total: Var,
    /// (n, 1) probability ratios.
    pub ratio: Var,
}

/// Records the full loss on `g`. With `lambda_cons == 0` the total is the
/// PPO node itself, so the two agree bit for bit.
pub fn build_loss<'a>(
    g: &mut Graph<'a>,
    params: &'a PolicyParams,
    batch: &Minibatch,
    config: &TrainConfig,
) -> Result<LossVars, TrainError> {
    let n = batch.len();
    if batch.actions.dim() != (n, ACTION_DIM)
        || batch.old_log_probs.dim() != (n, 1)
        || batch.advantages.dim() != (n, 1)
        || batch.returns.dim() != (n, 1)
        || batch.meta.len() != n
    {
        return Err(TrainError::InvalidConfig("minibatch columns have inconsistent lengths".into()));
    }
    let obs = g.constant(batch.obs.clone());
    let out = params.forward_graph(g, obs)?;

    // Diagonal Gaussian log-density of the stored actions.
    let actions = g.constant(batch.actions.clone());
    let diff = g.sub(actions, out.mean)?;
    let neg_ls = g.scale(out.log_std, -1.0);
    let inv_std = g.exp(neg_ls);
    let z = g.mul(diff, inv_std)?;
    let z2 = g.square(z);
    let quad = g.sum_cols(z2);
    let quad = g.scale(quad, -0.5);
    let ls_sum = g.sum(out.log_std);
    let log_prob = g.sub(quad, ls_sum)?;
    let log_prob = g.add_scalar(log_prob, -0.5 * ACTION_DIM as f64 * ln_2pi());

    let old = g.constant(batch.old_log_probs.clone());
    let log_ratio = g.sub(log_prob, old)?;
    let ratio = g.exp(log_ratio);
    let adv = g.constant(batch.advantages.clone());
    let surr1 = g.mul(ratio, adv)?;
    let clipped = g.clamp(ratio, 1.0 - config.clip_range, 1.0 + config.clip_range);
    let surr2 = g.mul(clipped, adv)?;
    let surr = g.minimum(surr1, surr2)?;
    let surr = g.mean(surr);
    let policy = g.scale(surr, -1.0);

    let returns = g.constant(batch.returns.clone());
    let err = g.sub(out.value, returns)?;
    let err2 = g.square(err);
    let mse = g.mean(err2);
    let value = g.scale(mse, 0.5);

    let entropy = g.add_scalar(ls_sum, ACTION_DIM as f64 * entropy_offset());
    let ent_term = g.scale(entropy, -config.entropy_coef);
    let ppo = g.add(policy, value)?;
    let ppo = g.add(ppo, ent_term)?;

    let omega_t = Array2::from_shape_fn((ACTION_DIM, MetaAction::COUNT), |(i, j)| EMBEDDINGS[j][i]);
    let omega_t = g.constant(omega_t * config.temperature);
    let logits = g.matmul(out.mean, omega_t)?;
    let lse = g.logsumexp_cols(logits);
    let picked = g.pick(logits, &batch.meta)?;
    let per_sample = g.sub(lse, picked)?;
    let consistency = g.mean(per_sample);

    let total = if config.lambda_cons == 0.0 {
        ppo
    } else {
        let weighted = g.scale(consistency, config.lambda_cons);
        g.add(ppo, weighted)?
    };
    Ok(LossVars {
        policy,
        value,
        entropy,
        consistency,
        ppo,
        total,
        ratio,
    })
}

/// Scalar summaries of one loss evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossStats {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub consistency: f64,
    pub ppo: f64,
    pub total: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

pub fn loss_stats(g: &Graph<'_>, vars: &LossVars, clip_range: f64) -> LossStats {
    let ratio = g.value(vars.ratio);
    let n = ratio.len() as f64;
    let clip_fraction = ratio.iter().filter(|r| (*r - 1.0).abs() > clip_range).count() as f64 / n;
    let approx_kl = ratio.iter().map(|r| (r - 1.0) - r.ln()).sum::<f64>() / n;
    LossStats {
        policy: g.scalar(vars.policy),
        value: g.scalar(vars.value),
        entropy: g.scalar(vars.entropy),
        consistency: g.scalar(vars.consistency),
        ppo: g.scalar(vars.ppo),
        total: g.scalar(vars.total),
        clip_fraction,
        approx_kl,
    }
}

/// Evaluates the loss without gradients.
pub fn evaluate_loss(params: &PolicyParams, batch: &Minibatch, config: &TrainConfig) -> Result<LossStats, TrainError> {
    let mut g = Graph::new();
    let vars = build_loss(&mut g, params, batch, config)?;
    Ok(loss_stats(&g, &vars, config.clip_range))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_action_gives_ln5() {
        for j in 0..5 {
            assert_relative_eq!(consistency_loss([0.0, 0.0], j, 1.0).unwrap(), 5f64.ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn strongly_aligned_fast() {
        let l = consistency_loss([10.0, 0.0], MetaAction::Fast.index(), 1.0).unwrap();
        let e = 10f64.exp();
        let oracle = -(e / (e + (-10f64).exp() + 3.0)).ln();
        assert_relative_eq!(l, oracle, epsilon = 1e-12);
        assert!((l - 1.362e-4).abs() < 1e-6);
    }

    #[test]
    fn out_of_range_index() {
        assert!(matches!(consistency_loss([0.0, 0.0], 5, 1.0), Err(TrainError::MetaIndex(5))));
    }

    #[test]
    fn advantage_normalization_moments() {
        let mut a: Vec<f64> = (0..256).map(|i| ((i * 37) % 101) as f64 * 0.3 - 7.0).collect();
        normalize_advantages(&mut a);
        let mean = a.iter().sum::<f64>() / 256.0;
        let std = (a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 256.0).sqrt();
        assert!(mean.abs() < 1e-6);
        assert!((std - 1.0).abs() < 1e-6);
    }
}
