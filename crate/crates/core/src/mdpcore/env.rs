use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::simworld::{Control, SceneSnapshot, SimConfig, World, WorldMap};

use super::reward::{compute_reward, RewardBreakdown, RewardParams, RollingStd};
use super::termination::{check_termination, TerminationConfig, TerminationReason};
use super::MdpError;

/// Everything that shapes one episode besides the seed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub sim: SimConfig,
    pub reward: RewardParams,
    pub termination: TerminationConfig,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub snapshot: SceneSnapshot,
    pub reward: RewardBreakdown,
    pub termination: Option<TerminationReason>,
    pub center_std: f64,
}

/// Episode context around a [`World`]: reward, termination, rolling lane statistics.
#[derive(Debug, Clone)]
pub struct DrivingEnv {
    map: Arc<WorldMap>,
    config: EnvConfig,
    world: World,
    current: SceneSnapshot,
    window: RollingStd,
    steps: usize,
    distance: f64,
    episode_seed: u64,
    done: bool,
}

impl DrivingEnv {
    /// Creates the environment and starts the episode for `episode_seed` (random route).
    pub fn new(map: Arc<WorldMap>, config: EnvConfig, episode_seed: u64) -> Result<Self, MdpError> {
        config.reward.validate()?;
        let world = World::random_route(Arc::clone(&map), config.sim, episode_seed)?;
        let current = world.snapshot();
        Ok(Self {
            map,
            config,
            world,
            current,
            window: RollingStd::default(),
            steps: 0,
            distance: 0.0,
            episode_seed,
            done: false,
        })
    }

    /// Restarts on a seed-chosen route.
    pub fn reset(&mut self, episode_seed: u64) -> Result<&SceneSnapshot, MdpError> {
        let world = World::random_route(Arc::clone(&self.map), self.config.sim, episode_seed)?;
        Ok(self.install(world, episode_seed))
    }

    /// Restarts on a specific route.
    pub fn reset_route(&mut self, route: usize, episode_seed: u64) -> Result<&SceneSnapshot, MdpError> {
        let world = World::new(Arc::clone(&self.map), self.config.sim, route, episode_seed)?;
        Ok(self.install(world, episode_seed))
    }

    fn install(&mut self, world: World, episode_seed: u64) -> &SceneSnapshot {
        self.current = world.snapshot();
        self.world = world;
        self.window.clear();
        self.steps = 0;
        self.distance = 0.0;
        self.episode_seed = episode_seed;
        self.done = false;
        &self.current
    }

    pub fn step(&mut self, control: Control) -> Result<StepOutcome, MdpError> {
        if self.done {
            return Err(MdpError::EpisodeOver);
        }
        let control = control.clamped();
        let prev = std::mem::replace(&mut self.current, self.world.step(control)?);
        let next = &self.current;
        self.steps += 1;
        self.distance += prev.ego.position().distance(next.ego.position());
        let center_std = self.window.push(next.frame.lateral);
        let reward = compute_reward(&prev, control, next, &self.config.reward, center_std)?;
        let termination = check_termination(
            next,
            &self.config.reward,
            self.steps,
            &self.config.termination,
            center_std,
        );
        self.done = termination.is_some();
        Ok(StepOutcome {
            snapshot: next.clone(),
            reward,
            termination,
            center_std,
        })
    }

    pub fn snapshot(&self) -> &SceneSnapshot {
        &self.current
    }

    pub fn map(&self) -> &Arc<WorldMap> {
        &self.map
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn route_index(&self) -> usize {
        self.world.route_index()
    }

    pub fn route_length(&self) -> f64 {
        self.current.route.length()
    }

    pub fn episode_seed(&self) -> u64 {
        self.episode_seed
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Path length driven this episode, meters.
    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn is_done(&self) -> bool {
        self.done
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simworld::BundledMap;

    #[test]
    fn identical_seeds_give_identical_trajectories() {
        let map = Arc::new(BundledMap::Seen.load());
        let run = || {
            let mut env = DrivingEnv::new(Arc::clone(&map), EnvConfig::default(), 42).unwrap();
            let mut trace = vec![];
            for k in 0..300 {
                let c = Control::new(((k as f64) * 0.1).sin(), ((k as f64) * 0.05).cos() * 0.2);
                let out = env.step(c).unwrap();
                trace.push((
                    out.snapshot.ego,
                    out.snapshot.objects.iter().map(|o| (o.x.to_bits(), o.y.to_bits())).collect::<Vec<_>>(),
                    out.reward.total.to_bits(),
                ));
                if out.termination.is_some() {
                    break;
                }
            }
            trace
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn stepping_after_done_fails() {
        let map = Arc::new(BundledMap::Seen.load());
        let cfg = EnvConfig {
            termination: TerminationConfig { max_steps: 3, ..Default::default() },
            ..Default::default()
        };
        let mut env = DrivingEnv::new(map, cfg, 1).unwrap();
        for _ in 0..2 {
            assert!(env.step(Control::default()).unwrap().termination.is_none());
        }
        assert_eq!(env.step(Control::default()).unwrap().termination, Some(TerminationReason::Timeout));
        assert!(matches!(env.step(Control::default()), Err(MdpError::EpisodeOver)));
        env.reset(2).unwrap();
        assert_eq!(env.steps(), 0);
    }

    #[test]
    fn distance_accumulates_displacement() {
        let map = Arc::new(BundledMap::Seen.load());
        let mut env = DrivingEnv::new(map, EnvConfig::default(), 3).unwrap();
        env.reset_route(0, 3).unwrap();
        let mut last = env.snapshot().ego.position();
        let mut sum = 0.0;
        for _ in 0..40 {
            let out = env.step(Control::new(1.0, 0.0)).unwrap();
            sum += last.distance(out.snapshot.ego.position());
            last = out.snapshot.ego.position();
        }
        assert!((env.distance() - sum).abs() < 1e-12);
        assert!(env.distance() > 0.0);
    }
}
