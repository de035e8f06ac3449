//! Command-line front end: config resolution and the train/eval/bench/replay commands.

pub mod args;
pub mod commands;
pub mod config;

pub use commands::{cmd_bench, cmd_eval, cmd_replay, cmd_train, replay_dir, BenchSummary, CheckpointMeta, MapSummary};
pub use config::{resolve, Overrides, RunConfig};
