//! The advisor-augmented MDP: observations, reward, termination, episode context.

mod env;
mod observation;
mod reward;
mod termination;

use thiserror::Error;

use crate::simworld::SimError;

pub use env::{DrivingEnv, EnvConfig, StepOutcome};
pub use observation::{build_observation, Observation, LOOKAHEAD, OBS_DIM};
pub use reward::{compute_reward, efficiency_reward, lane_reward, RewardBreakdown, RewardParams, RollingStd};
pub use termination::{check_termination, TerminationConfig, TerminationReason};

#[derive(Debug, Error)]
pub enum MdpError {
    #[error("route has no waypoints")]
    EmptyRoute,
    #[error("observation must have {OBS_DIM} entries, got {0}")]
    ObservationLength(usize),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("invalid reward parameters: {0:?}")]
    InvalidRewardParams(RewardParams),
    #[error("episode already terminated; reset first")]
    EpisodeOver,
    #[error(transparent)]
    Sim(#[from] SimError),
}
