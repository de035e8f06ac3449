use std::io::Write;

use super::update::UpdateStats;
use super::TrainError;

pub const TRAIN_LOG_HEADER: [&str; 13] = [
    "update",
    "step",
    "episode_reward_mean",
    "speed_mean_kmh",
    "survived_distance_mean",
    "episodes",
    "policy_loss",
    "value_loss",
    "entropy",
    "consistency_loss",
    "total_loss",
    "clip_fraction",
    "approx_kl",
];

/// One row of the training curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateRecord {
    pub update: usize,
    pub step: usize,
    /// Means over the most recent finished episodes; NaN before the first one ends.
    pub episode_reward_mean: f64,
    pub speed_mean_kmh: f64,
    pub survived_distance_mean: f64,
    pub episodes: usize,
    pub stats: UpdateStats,
}

pub struct TrainLogWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TrainLogWriter<W> {
    pub fn new(writer: W) -> Result<Self, TrainError> {
        let mut inner = csv::Writer::from_writer(writer);
        inner.write_record(TRAIN_LOG_HEADER)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, r: &UpdateRecord) -> Result<(), TrainError> {
        let s = &r.stats;
        let fields = [
            r.update.to_string(),
            r.step.to_string(),
            r.episode_reward_mean.to_string(),
            r.speed_mean_kmh.to_string(),
            r.survived_distance_mean.to_string(),
            r.episodes.to_string(),
            s.policy_loss.to_string(),
            s.value_loss.to_string(),
            s.entropy.to_string(),
            s.consistency_loss.to_string(),
            s.total_loss.to_string(),
            s.clip_fraction.to_string(),
            s.approx_kl.to_string(),
        ];
        self.inner.write_record(&fields)?;
        self.inner.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W, TrainError> {
        self.inner
            .into_inner()
            .map_err(|e| TrainError::Io(std::io::Error::other(e.to_string())))
    }
}
