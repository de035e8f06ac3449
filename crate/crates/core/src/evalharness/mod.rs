//! Evaluation episodes, the ten driving metrics, agent comparison, and replay.

mod compare;
mod episode;
mod metrics;
mod replay;
mod run;

use thiserror::Error;

use crate::advisor::AdvisorError;
use crate::mdpcore::MdpError;
use crate::policy::PolicyError;

pub use compare::{compare, Comparison};
pub use episode::{EpisodeLog, ObjectPose, StepRecord};
pub use metrics::{compute_metrics, MetricsReport, HIGHER_IS_BETTER, METRIC_NAMES};
pub use replay::{replay, write_trajectory, ReplayReport, REPLAY_TOLERANCE};
pub use run::{eval_episode_seed, run_episode, run_episodes, FrozenPolicy};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("at least one episode is required")]
    NoEpisodes,
    #[error("comparison needs at least 2 reports, got {0}")]
    TooFewReports(usize),
    #[error("episode log has no steps")]
    EmptyLog,
    #[error("episode log line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("replay diverged at step {step}: {detail}")]
    Divergence { step: usize, detail: String },
    #[error("log was recorded on map `{log}`, not `{map}`")]
    MapMismatch { log: String, map: String },
    #[error(transparent)]
    Env(#[from] MdpError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Advisor(#[from] AdvisorError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
