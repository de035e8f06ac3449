use std::sync::Arc;

use super::episode::{EpisodeLog, ObjectPose, StepRecord};
use super::EvalError;
use crate::advisor::{Advisor, AdvisorConfig};
use crate::mdpcore::{build_observation, DrivingEnv, EnvConfig};
use crate::policy::{ObsNormalizer, PolicyParams};
use crate::seed::{derive_seed, streams};
use crate::simworld::{Control, WorldMap};

/// A frozen policy: weights plus the observation statistics it was trained with.
#[derive(Debug, Clone, Copy)]
pub struct FrozenPolicy<'a> {
    pub params: &'a PolicyParams,
    pub normalizer: &'a ObsNormalizer,
}

impl FrozenPolicy<'_> {
    /// Deterministic action (the distribution mean).
    pub fn act(&self, raw_obs: &[f64]) -> Result<[f64; 2], EvalError> {
        let obs = self.normalizer.normalize(raw_obs)?;
        Ok(self.params.forward(&obs)?.0.mean)
    }
}

pub fn eval_episode_seed(seed: u64, episode: usize) -> u64 {
    derive_seed(seed, streams::EVAL_EPISODES, episode as u64)
}

/// Runs one episode to termination from an already reset environment.
pub fn run_episode(
    policy: FrozenPolicy<'_>,
    env: &mut DrivingEnv,
    advisor: &mut Advisor,
) -> Result<EpisodeLog, EvalError> {
    advisor.reset();
    let mut steps = Vec::new();
    loop {
        let advice = advisor.advise(env.snapshot());
        let obs = build_observation(env.snapshot(), advice.meta)?.to_array();
        let action = policy.act(&obs)?;
        let out = env.step(Control::new(action[0], action[1]))?;
        let s = &out.snapshot;
        steps.push(StepRecord {
            t: s.t,
            x: s.ego.x,
            y: s.ego.y,
            heading: s.ego.heading,
            speed: s.ego.speed,
            steering: s.ego.steering,
            throttle: s.ego.throttle,
            action_throttle: action[0],
            action_steering: action[1],
            reward: out.reward.total,
            d: s.frame.lateral,
            meta: advice.meta,
            objects: s
                .objects
                .iter()
                .map(|o| ObjectPose {
                    id: o.id,
                    x: o.x,
                    y: o.y,
                    heading: o.heading,
                })
                .collect(),
        });
        if let Some(termination) = out.termination {
            return Ok(EpisodeLog {
                map_id: env.map().map_id.clone(),
                route: env.route_index(),
                episode_seed: env.episode_seed(),
                route_length: env.route_length(),
                termination,
                distance: env.distance(),
                progress: s.frame.progress,
                steps,
            });
        }
    }
}

/// `n` deterministic episodes; episode `i` uses a seed derived from `(seed, i)`.
pub fn run_episodes(
    policy: FrozenPolicy<'_>,
    map: Arc<WorldMap>,
    env_config: EnvConfig,
    advisor_config: &AdvisorConfig,
    n: usize,
    seed: u64,
) -> Result<Vec<EpisodeLog>, EvalError> {
    if n == 0 {
        return Err(EvalError::NoEpisodes);
    }
    let mut advisor = Advisor::new(advisor_config.clone())?;
    let mut env = DrivingEnv::new(map, env_config, eval_episode_seed(seed, 0))?;
    let mut logs = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            env.reset(eval_episode_seed(seed, i))?;
        }
        logs.push(run_episode(policy, &mut env, &mut advisor)?);
    }
    Ok(logs)
}
