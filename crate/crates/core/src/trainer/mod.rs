//! PPO with generalized advantage estimation and the semantic consistency term.

mod adam;
mod buffer;
mod config;
mod gae;
mod curve;
mod loss;
mod rollout;
mod update;

use std::collections::VecDeque;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::advisor::{AdvisorConfig, AdvisorError};
use crate::mdpcore::{EnvConfig, MdpError, OBS_DIM};
use crate::policy::{Checkpoint, ObsNormalizer, PolicyError, PolicyParams};
use crate::seed::{derive_seed, streams};
use crate::simworld::WorldMap;

pub use adam::{clip_grad_norm, Adam};
pub use buffer::{RolloutBuffer, Transition};
pub use config::{AgentKind, Preset, TrainConfig};
pub use gae::compute_gae;
pub use curve::{TrainLogWriter, UpdateRecord, TRAIN_LOG_HEADER};
pub use loss::{
    build_loss, consistency_loss, evaluate_loss, loss_stats, normalize_advantages, LossStats, LossVars, Minibatch,
};
pub use rollout::{Collector, EpisodeSummary};
pub use update::{loss_gradients, minibatch, update, UpdateStats};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("rewards ({rewards}), values ({values}) and dones ({dones}) differ in length")]
    LengthMismatch { rewards: usize, values: usize, dones: usize },
    #[error("meta-action index {0} is out of range")]
    MetaIndex(usize),
    #[error("rollout buffer is full ({0} transitions)")]
    BufferFull(usize),
    #[error("rollout aborted after {collected} transitions: {source}")]
    Rollout {
        collected: usize,
        #[source]
        source: Box<TrainError>,
    },
    #[error("non-finite loss: {0}")]
    NonFiniteLoss(String),
    #[error(transparent)]
    Env(#[from] MdpError),
    #[error(transparent)]
    Advisor(#[from] AdvisorError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("training log: {0}")]
    Log(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Everything needed to train one agent.
#[derive(Debug, Clone)]
pub struct TrainSetup {
    pub map: Arc<WorldMap>,
    pub env: EnvConfig,
    pub advisor: AdvisorConfig,
    pub train: TrainConfig,
}

/// Episode statistics are averaged over this many most recent episodes.
pub const EPISODE_WINDOW: usize = 10;

/// Alternates rollout collection and optimization.
pub struct Trainer {
    setup: TrainSetup,
    params: PolicyParams,
    adam: Adam,
    norm: ObsNormalizer,
    collector: Collector,
    shuffle_rng: ChaCha8Rng,
    updates_done: usize,
    steps_done: usize,
    episodes_done: usize,
    recent: VecDeque<EpisodeSummary>,
}

impl Trainer {
    pub fn new(setup: TrainSetup) -> Result<Self, TrainError> {
        setup.train.validate()?;
        if setup.train.network.obs_dim != OBS_DIM {
            return Err(TrainError::InvalidConfig(format!("network input must be {OBS_DIM} wide")));
        }
        let seed = setup.train.seed;
        let params = PolicyParams::init(setup.train.network.clone(), derive_seed(seed, streams::PARAMS, 0))?;
        let adam = Adam::new(params.tensors().iter().map(|t| t.dim()));
        let collector = Collector::new(Arc::clone(&setup.map), setup.env, setup.advisor.clone(), seed)?;
        Ok(Self {
            params,
            adam,
            norm: ObsNormalizer::new(OBS_DIM),
            collector,
            shuffle_rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, streams::SHUFFLE, 0)),
            updates_done: 0,
            steps_done: 0,
            episodes_done: 0,
            recent: VecDeque::with_capacity(EPISODE_WINDOW),
            setup,
        })
    }

    pub fn setup(&self) -> &TrainSetup {
        &self.setup
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn normalizer(&self) -> &ObsNormalizer {
        &self.norm
    }

    pub fn updates_done(&self) -> usize {
        self.updates_done
    }

    pub fn steps_done(&self) -> usize {
        self.steps_done
    }

    pub fn is_finished(&self) -> bool {
        self.updates_done >= self.setup.train.updates()
    }

    pub fn collector(&self) -> &Collector {
        &self.collector
    }

    /// One rollout followed by one optimization phase.
    pub fn step(&mut self) -> Result<UpdateRecord, TrainError> {
        let cfg = &self.setup.train;
        let (buffer, episodes) =
            self.collector
                .collect(&self.params, &mut self.norm, cfg.n_steps, cfg.gamma, cfg.gae_lambda)?;
        let stats = update(&mut self.params, &mut self.adam, &buffer, cfg, &mut self.shuffle_rng)?;
        self.updates_done += 1;
        self.steps_done += buffer.len();
        self.episodes_done += episodes.len();
        for e in episodes {
            if self.recent.len() == EPISODE_WINDOW {
                self.recent.pop_front();
            }
            self.recent.push_back(e);
        }
        let mean = |f: fn(&EpisodeSummary) -> f64| {
            if self.recent.is_empty() {
                f64::NAN
            } else {
                self.recent.iter().map(f).sum::<f64>() / self.recent.len() as f64
            }
        };
        Ok(UpdateRecord {
            update: self.updates_done,
            step: self.steps_done,
            episode_reward_mean: mean(|e| e.reward),
            speed_mean_kmh: mean(|e| e.mean_speed_kmh),
            survived_distance_mean: mean(|e| e.distance),
            episodes: self.episodes_done,
            stats,
        })
    }

    /// Trains to completion, reporting every update.
    pub fn run<F>(&mut self, mut on_update: F) -> Result<(), TrainError>
    where
        F: FnMut(&UpdateRecord, &Trainer) -> Result<(), TrainError>,
    {
        while !self.is_finished() {
            let record = self.step()?;
            log::info!(
                "update {} step {} reward {:.2} speed {:.1} km/h distance {:.1} m",
                record.update,
                record.step,
                record.episode_reward_mean,
                record.speed_mean_kmh,
                record.survived_distance_mean
            );
            on_update(&record, self)?;
        }
        Ok(())
    }

    pub fn checkpoint(&self, meta: serde_json::Value) -> Checkpoint {
        Checkpoint::new(&self.params, &self.norm, meta)
    }
}
