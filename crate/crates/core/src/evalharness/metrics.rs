use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::episode::EpisodeLog;
use super::EvalError;

/// The ten evaluation metrics. Speeds in km/h, distances in meters; step-level
/// statistics are pooled over every step of every episode with population std.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub episodes: usize,
    /// Success rate.
    pub sr: f64,
    /// Total traveled distance.
    pub td: f64,
    /// Average distance per episode.
    pub ad: f64,
    /// Mean route completion fraction.
    pub rc: f64,
    /// Speed mean / std.
    pub sm: f64,
    pub ss: f64,
    /// Centerline deviation |d| mean / std.
    pub cdm: f64,
    pub cds: f64,
    /// Per-step reward mean / std.
    pub rm: f64,
    pub rs: f64,
}

/// Metric column names in report order.
pub const METRIC_NAMES: [&str; 10] = ["SR", "TD", "AD", "RC", "SM", "SS", "CDM", "CDS", "RM", "RS"];

/// Whether a larger value is better, per metric.
pub const HIGHER_IS_BETTER: [bool; 10] = [true, true, true, true, true, false, false, false, true, false];

/// Running mean and population variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn mean(&self) -> f64 {
        if self.n > 0.0 {
            self.mean
        } else {
            0.0
        }
    }

    fn std(&self) -> f64 {
        if self.n > 0.0 {
            (self.m2 / self.n).max(0.0).sqrt()
        } else {
            0.0
        }
    }
}

pub fn compute_metrics(logs: &[EpisodeLog]) -> Result<MetricsReport, EvalError> {
    if logs.is_empty() {
        return Err(EvalError::NoEpisodes);
    }
    let n = logs.len() as f64;
    let successes = logs.iter().filter(|l| l.is_success()).count() as f64;
    let td: f64 = logs.iter().map(|l| l.distance).sum();
    let rc = logs.iter().map(EpisodeLog::progress_fraction).sum::<f64>() / n;
    let (mut speed, mut dev, mut reward) = (Moments::default(), Moments::default(), Moments::default());
    for s in logs.iter().flat_map(|l| &l.steps) {
        speed.push(s.speed_kmh());
        dev.push(s.d.abs());
        reward.push(s.reward);
    }
    Ok(MetricsReport {
        episodes: logs.len(),
        sr: successes / n,
        td,
        ad: td / n,
        rc,
        sm: speed.mean(),
        ss: speed.std(),
        cdm: dev.mean(),
        cds: dev.std(),
        rm: reward.mean(),
        rs: reward.std(),
    })
}

impl MetricsReport {
    pub fn values(&self) -> [f64; 10] {
        [
            self.sr, self.td, self.ad, self.rc, self.sm, self.ss, self.cdm, self.cds, self.rm, self.rs,
        ]
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), EvalError> {
        let mut csv = csv::Writer::from_writer(w);
        let mut header = vec!["episodes".to_string()];
        header.extend(METRIC_NAMES.iter().map(|s| s.to_string()));
        csv.write_record(&header)?;
        let mut row = vec![self.episodes.to_string()];
        row.extend(self.values().iter().map(f64::to_string));
        csv.write_record(&row)?;
        csv.flush()?;
        Ok(())
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "episodes: {}", self.episodes)?;
        writeln!(f, "SR  success rate          {:.3}", self.sr)?;
        writeln!(f, "TD  traveled distance (m) {:.1}", self.td)?;
        writeln!(f, "AD  average distance (m)  {:.1}", self.ad)?;
        writeln!(f, "RC  route completion      {:.3}", self.rc)?;
        writeln!(f, "SM  speed mean (km/h)     {:.2}", self.sm)?;
        writeln!(f, "SS  speed std (km/h)      {:.2}", self.ss)?;
        writeln!(f, "CDM centerline dev. (m)   {:.3}", self.cdm)?;
        writeln!(f, "CDS centerline std (m)    {:.3}", self.cds)?;
        writeln!(f, "RM  reward mean           {:.3}", self.rm)?;
        write!(f, "RS  reward std            {:.3}", self.rs)
    }
}
