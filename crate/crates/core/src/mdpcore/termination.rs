use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::simworld::SceneSnapshot;

use super::reward::RewardParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    Collision,
    OffLane,
    BadAngle,
    RouteComplete,
    Timeout,
    Oscillation,
}

impl TerminationReason {
    pub const ALL: [TerminationReason; 6] = [
        TerminationReason::Collision,
        TerminationReason::OffLane,
        TerminationReason::BadAngle,
        TerminationReason::RouteComplete,
        TerminationReason::Timeout,
        TerminationReason::Oscillation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::Collision => "collision",
            TerminationReason::OffLane => "off_lane",
            TerminationReason::BadAngle => "bad_angle",
            TerminationReason::RouteComplete => "route_complete",
            TerminationReason::Timeout => "timeout",
            TerminationReason::Oscillation => "oscillation",
        }
    }
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TerminationReason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown termination reason `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerminationConfig {
    pub max_steps: usize,
    /// Progress fraction counted as arrival.
    pub completion_fraction: f64,
    /// End the episode when the rolling centerline std exceeds `max_std_center_lane`.
    pub terminate_on_oscillation: bool,
}

impl Default for TerminationConfig {
    fn default() -> Self {
        Self {
            max_steps: 2000,
            completion_fraction: 0.99,
            terminate_on_oscillation: false,
        }
    }
}

/// Checks terminal conditions in priority order:
/// collision, off_lane, bad_angle, route_complete, timeout, then (opt-in) oscillation.
pub fn check_termination(
    snapshot: &SceneSnapshot,
    params: &RewardParams,
    elapsed_steps: usize,
    config: &TerminationConfig,
    center_std: f64,
) -> Option<TerminationReason> {
    let frame = &snapshot.frame;
    if snapshot.collision.is_some() {
        Some(TerminationReason::Collision)
    } else if frame.lateral.abs() >= params.max_distance {
        Some(TerminationReason::OffLane)
    } else if frame.heading_error.abs().to_degrees() >= params.max_angle_center_lane {
        Some(TerminationReason::BadAngle)
    } else if frame.progress >= config.completion_fraction * snapshot.route.length() {
        Some(TerminationReason::RouteComplete)
    } else if elapsed_steps >= config.max_steps {
        Some(TerminationReason::Timeout)
    } else if config.terminate_on_oscillation && center_std > params.max_std_center_lane {
        Some(TerminationReason::Oscillation)
    } else {
        None
    }
}
