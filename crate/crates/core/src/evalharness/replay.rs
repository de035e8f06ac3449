use std::io::Write;
use std::sync::Arc;

use super::episode::EpisodeLog;
use super::EvalError;
use crate::mdpcore::{DrivingEnv, EnvConfig};
use crate::simworld::{Control, WorldMap};

pub const REPLAY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub steps: usize,
    /// Largest absolute state difference seen.
    pub max_error: f64,
}

/// Re-simulates the logged actions and checks every recorded state.
pub fn replay(log: &EpisodeLog, map: Arc<WorldMap>, env_config: EnvConfig) -> Result<ReplayReport, EvalError> {
    if log.is_empty() {
        return Err(EvalError::EmptyLog);
    }
    if log.map_id != map.map_id {
        return Err(EvalError::MapMismatch {
            log: log.map_id.clone(),
            map: map.map_id.clone(),
        });
    }
    let mut env = DrivingEnv::new(map, env_config, log.episode_seed)?;
    env.reset_route(log.route, log.episode_seed)?;
    let mut max_error = 0.0f64;
    for (k, rec) in log.steps.iter().enumerate() {
        let out = env
            .step(Control::new(rec.action_throttle, rec.action_steering))
            .map_err(|e| EvalError::Divergence {
                step: k,
                detail: format!("environment refused the step: {e}"),
            })?;
        let s = &out.snapshot;
        let pairs = [
            ("x", s.ego.x, rec.x),
            ("y", s.ego.y, rec.y),
            ("heading", s.ego.heading, rec.heading),
            ("speed", s.ego.speed, rec.speed),
            ("reward", out.reward.total, rec.reward),
            ("d", s.frame.lateral, rec.d),
        ];
        for (name, sim, logged) in pairs {
            let err = (sim - logged).abs();
            max_error = max_error.max(err);
            if !(err <= REPLAY_TOLERANCE) {
                return Err(EvalError::Divergence {
                    step: k,
                    detail: format!("{name}: replayed {sim}, logged {logged}"),
                });
            }
        }
        if s.objects.len() != rec.objects.len() {
            return Err(EvalError::Divergence {
                step: k,
                detail: format!("{} objects replayed, {} logged", s.objects.len(), rec.objects.len()),
            });
        }
        for (o, r) in s.objects.iter().zip(&rec.objects) {
            let err = (o.x - r.x).abs().max((o.y - r.y).abs()).max((o.heading - r.heading).abs());
            max_error = max_error.max(err);
            if o.id != r.id || !(err <= REPLAY_TOLERANCE) {
                return Err(EvalError::Divergence {
                    step: k,
                    detail: format!("object {} differs from logged object {}", o.id, r.id),
                });
            }
        }
        let done = out.termination.is_some();
        let last = k + 1 == log.steps.len();
        if done != last {
            return Err(EvalError::Divergence {
                step: k,
                detail: format!("episode end mismatch (replay done: {done})"),
            });
        }
        if last && out.termination != Some(log.termination) {
            return Err(EvalError::Divergence {
                step: k,
                detail: format!("terminated with {:?}, logged {}", out.termination, log.termination),
            });
        }
    }
    Ok(ReplayReport {
        steps: log.steps.len(),
        max_error,
    })
}

/// Plottable trajectory: t, x, y, heading, speed (km/h), d.
pub fn write_trajectory<W: Write>(log: &EpisodeLog, w: W) -> Result<(), EvalError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["t", "x", "y", "heading", "speed_kmh", "d"])?;
    for s in &log.steps {
        csv.write_record([
            s.t.to_string(),
            s.x.to_string(),
            s.y.to_string(),
            s.heading.to_string(),
            s.speed_kmh().to_string(),
            s.d.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}
