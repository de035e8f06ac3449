use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::buffer::{RolloutBuffer, Transition};
use super::TrainError;
use crate::advisor::{Advice, Advisor, AdvisorConfig};
use crate::mdpcore::{build_observation, DrivingEnv, EnvConfig, TerminationReason, OBS_DIM};
use crate::policy::{ObsNormalizer, PolicyParams};
use crate::seed::{derive_seed, streams};
use crate::simworld::{Control, WorldMap};

/// Outcome of one finished training episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub reward: f64,
    pub mean_speed_kmh: f64,
    pub distance: f64,
    pub steps: usize,
    pub termination: TerminationReason,
}

/// Drives one environment with the current policy. The advisor and the next
/// observation are always prepared one step ahead so the bootstrap value uses
/// the same inputs the next step will.
pub struct Collector {
    env: DrivingEnv,
    advisor: Advisor,
    rng: ChaCha8Rng,
    seed: u64,
    episode: u64,
    advice: Advice,
    raw_obs: [f64; OBS_DIM],
    ep_reward: f64,
    ep_speed: f64,
}

impl Collector {
    pub fn new(map: Arc<WorldMap>, env: EnvConfig, advisor: AdvisorConfig, seed: u64) -> Result<Self, TrainError> {
        let env = DrivingEnv::new(map, env, derive_seed(seed, streams::TRAIN_EPISODES, 0))?;
        let mut advisor = Advisor::new(advisor)?;
        advisor.reset();
        let advice = advisor.advise(env.snapshot());
        let raw_obs = build_observation(env.snapshot(), advice.meta)?.to_array();
        Ok(Self {
            env,
            advisor,
            rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, streams::ACTIONS, 0)),
            seed,
            episode: 0,
            advice,
            raw_obs,
            ep_reward: 0.0,
            ep_speed: 0.0,
        })
    }

    pub fn advisor(&self) -> &Advisor {
        &self.advisor
    }

    pub fn episodes_started(&self) -> u64 {
        self.episode + 1
    }

    fn prepare(&mut self) -> Result<(), TrainError> {
        self.advice = self.advisor.advise(self.env.snapshot());
        self.raw_obs = build_observation(self.env.snapshot(), self.advice.meta)?.to_array();
        Ok(())
    }

    fn run(
        &mut self,
        params: &PolicyParams,
        norm: &mut ObsNormalizer,
        buffer: &mut RolloutBuffer,
        episodes: &mut Vec<EpisodeSummary>,
        n_steps: usize,
    ) -> Result<(), TrainError> {
        for _ in 0..n_steps {
            norm.update(&self.raw_obs)?;
            let obs = norm.normalize(&self.raw_obs)?;
            let (dist, value) = params.forward(&obs)?;
            let action = dist.sample(&mut self.rng);
            let log_prob = dist.log_prob(action);
            let outcome = self.env.step(Control::new(action[0], action[1]))?;
            let done = outcome.termination.is_some();
            buffer.push(Transition {
                obs: &obs,
                action,
                log_prob,
                value,
                reward: outcome.reward.total,
                done,
                meta: self.advice.meta,
                termination: outcome.termination,
            })?;
            self.ep_reward += outcome.reward.total;
            self.ep_speed += outcome.snapshot.ego.speed * 3.6;
            if let Some(termination) = outcome.termination {
                let steps = self.env.steps();
                episodes.push(EpisodeSummary {
                    reward: self.ep_reward,
                    mean_speed_kmh: self.ep_speed / steps as f64,
                    distance: self.env.distance(),
                    steps,
                    termination,
                });
                self.ep_reward = 0.0;
                self.ep_speed = 0.0;
                self.episode += 1;
                self.env.reset(derive_seed(self.seed, streams::TRAIN_EPISODES, self.episode))?;
                self.advisor.reset();
            }
            self.prepare()?;
        }
        Ok(())
    }

    /// Collects exactly `n_steps` transitions, resetting across episode ends,
    /// and computes advantages.
    pub fn collect(
        &mut self,
        params: &PolicyParams,
        norm: &mut ObsNormalizer,
        n_steps: usize,
        gamma: f64,
        lambda: f64,
    ) -> Result<(RolloutBuffer, Vec<EpisodeSummary>), TrainError> {
        let mut buffer = RolloutBuffer::new(n_steps, params.shape().obs_dim);
        let mut episodes = Vec::new();
        if let Err(e) = self.run(params, norm, &mut buffer, &mut episodes, n_steps) {
            return Err(TrainError::Rollout {
                collected: buffer.len(),
                source: Box::new(e),
            });
        }
        let (_, bootstrap) = params.forward(&norm.normalize(&self.raw_obs)?)?;
        buffer.finish(bootstrap, gamma, lambda)?;
        Ok((buffer, episodes))
    }
}
