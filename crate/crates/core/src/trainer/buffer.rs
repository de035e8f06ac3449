use ndarray::Array2;

use super::gae::compute_gae;
use super::TrainError;
use crate::advisor::MetaAction;
use crate::mdpcore::TerminationReason;
use crate::policy::ACTION_DIM;

/// Fixed-capacity store of on-policy transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer {
    capacity: usize,
    obs_dim: usize,
    /// Normalized observations, row-major.
    obs: Vec<f64>,
    pub actions: Vec<[f64; ACTION_DIM]>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub meta: Vec<MetaAction>,
    pub embeddings: Vec<[f64; 2]>,
    pub terminations: Vec<Option<TerminationReason>>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct Transition<'a> {
    pub obs: &'a [f64],
    pub action: [f64; ACTION_DIM],
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
    pub meta: MetaAction,
    pub termination: Option<TerminationReason>,
}

impl RolloutBuffer {
    pub fn new(capacity: usize, obs_dim: usize) -> Self {
        Self {
            capacity,
            obs_dim,
            obs: Vec::with_capacity(capacity * obs_dim),
            actions: Vec::with_capacity(capacity),
            log_probs: Vec::with_capacity(capacity),
            values: Vec::with_capacity(capacity),
            rewards: Vec::with_capacity(capacity),
            dones: Vec::with_capacity(capacity),
            meta: Vec::with_capacity(capacity),
            embeddings: Vec::with_capacity(capacity),
            terminations: Vec::with_capacity(capacity),
            advantages: Vec::new(),
            returns: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn push(&mut self, t: Transition<'_>) -> Result<(), TrainError> {
        if self.is_full() {
            return Err(TrainError::BufferFull(self.capacity));
        }
        if t.obs.len() != self.obs_dim {
            return Err(TrainError::InvalidConfig(format!(
                "observation of width {} pushed into a buffer of width {}",
                t.obs.len(),
                self.obs_dim
            )));
        }
        self.obs.extend_from_slice(t.obs);
        self.actions.push(t.action);
        self.log_probs.push(t.log_prob);
        self.values.push(t.value);
        self.rewards.push(t.reward);
        self.dones.push(t.done);
        self.meta.push(t.meta);
        self.embeddings.push(t.meta.embedding().0);
        self.terminations.push(t.termination);
        Ok(())
    }

    pub fn obs_row(&self, i: usize) -> &[f64] {
        &self.obs[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    /// Observations of the given rows as a matrix.
    pub fn obs_rows(&self, rows: &[usize]) -> Array2<f64> {
        let mut out = Array2::zeros((rows.len(), self.obs_dim));
        for (k, &i) in rows.iter().enumerate() {
            out.row_mut(k).as_slice_mut().expect("standard layout").copy_from_slice(self.obs_row(i));
        }
        out
    }

    /// Fills advantages and returns; `bootstrap_value` is V of the state after the last transition.
    pub fn finish(&mut self, bootstrap_value: f64, gamma: f64, lambda: f64) -> Result<(), TrainError> {
        let (adv, ret) = compute_gae(&self.rewards, &self.values, &self.dones, bootstrap_value, gamma, lambda)?;
        self.advantages = adv;
        self.returns = ret;
        Ok(())
    }

    pub fn is_finished(&self) -> bool {
        self.advantages.len() == self.len() && !self.is_empty()
    }
}
