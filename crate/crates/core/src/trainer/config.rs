use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::advisor::{AdvisorBackend, AdvisorConfig};
use crate::policy::PolicyShape;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_range: f64,
    pub entropy_coef: f64,
    pub n_epochs: usize,
    pub n_steps: usize,
    pub minibatch_size: usize,
    /// Weight of the consistency term in the total loss.
    pub lambda_cons: f64,
    /// Softmax temperature of the consistency term.
    pub temperature: f64,
    pub max_grad_norm: f64,
    pub total_steps: usize,
    pub seed: u64,
    /// Write a checkpoint every this many updates (0 disables intermediate checkpoints).
    pub checkpoint_interval: usize,
    pub network: PolicyShape,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Preset::Desk.train_config()
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: &str| Err(TrainError::InvalidConfig(msg.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must lie in [0, 1]");
        }
        if !(self.clip_range > 0.0) {
            return bad("clip_range must be positive");
        }
        if !(self.lambda_cons >= 0.0) {
            return bad("lambda_cons must be non-negative");
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate must be a non-negative number");
        }
        if !(self.max_grad_norm > 0.0) {
            return bad("max_grad_norm must be positive");
        }
        if self.n_steps == 0 || self.minibatch_size == 0 || self.n_epochs == 0 {
            return bad("n_steps, minibatch_size and n_epochs must be positive");
        }
        if self.minibatch_size > self.n_steps {
            return bad("minibatch_size cannot exceed n_steps");
        }
        self.network.validate().map_err(|e| TrainError::InvalidConfig(e.to_string()))
    }

    /// Number of rollout/update cycles needed to cover `total_steps`.
    pub fn updates(&self) -> usize {
        self.total_steps.div_ceil(self.n_steps)
    }
}

/// Named hyperparameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Published hyperparameters verbatim.
    Paper,
    /// Same, with a learning rate that makes progress on a desk budget.
    Desk,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Paper => "paper",
            Preset::Desk => "desk",
        }
    }

    pub fn train_config(self) -> TrainConfig {
        let base = TrainConfig {
            learning_rate: 1e-6,
            gamma: 0.98,
            gae_lambda: 0.95,
            clip_range: 0.2,
            entropy_coef: 0.05,
            n_epochs: 10,
            n_steps: 1024,
            minibatch_size: 256,
            lambda_cons: 0.1,
            temperature: 1.0,
            max_grad_norm: 0.5,
            total_steps: 1_000_000,
            seed: 0,
            checkpoint_interval: 0,
            network: PolicyShape::default(),
        };
        match self {
            Preset::Paper => base,
            Preset::Desk => TrainConfig {
                learning_rate: 3e-4,
                total_steps: 40_960,
                checkpoint_interval: 10,
                ..base
            },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(format!("unknown preset `{other}` (expected paper or desk)")),
        }
    }
}

/// The three compared systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    /// Plain PPO, no guidance.
    Rl,
    /// PPO with route-topology meta-actions in the observation.
    Mrl,
    /// PPO with scene-aware meta-actions and the consistency loss.
    Covlm,
}

impl AgentKind {
    pub const ALL: [AgentKind; 3] = [AgentKind::Rl, AgentKind::Mrl, AgentKind::Covlm];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Rl => "rl",
            AgentKind::Mrl => "mrl",
            AgentKind::Covlm => "covlm",
        }
    }

    pub fn backend(self) -> AdvisorBackend {
        match self {
            AgentKind::Rl => AdvisorBackend::None,
            AgentKind::Mrl => AdvisorBackend::MapPrior,
            AgentKind::Covlm => AdvisorBackend::Oracle,
        }
    }

    /// Forces the backend (and, for the baselines, a zero consistency weight).
    pub fn apply(self, advisor: &mut AdvisorConfig, train: &mut TrainConfig) {
        advisor.backend = self.backend();
        if self != AgentKind::Covlm {
            train.lambda_cons = 0.0;
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown agent `{s}` (expected rl, mrl or covlm)"))
    }
}
