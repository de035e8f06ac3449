use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::simworld::{Control, SceneSnapshot};

use super::MdpError;

const KMH_PER_MS: f64 = 3.6;

/// Reward shaping parameters. Speeds are km/h, angles degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardParams {
    pub min_speed: f64,
    pub max_speed: f64,
    pub target_speed: f64,
    /// Lateral offset at which the lane term reaches zero, meters.
    pub max_distance: f64,
    /// Rolling centerline-offset std at which the lane term reaches zero, meters.
    pub max_std_center_lane: f64,
    pub max_angle_center_lane: f64,
    pub penalty_reward: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            min_speed: 0.0,
            max_speed: 28.8,
            target_speed: 25.0,
            max_distance: 4.0,
            max_std_center_lane: 0.4,
            max_angle_center_lane: 90.0,
            penalty_reward: -10.0,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), MdpError> {
        let ok = self.min_speed < self.target_speed
            && self.target_speed < self.max_speed
            && self.max_distance > 0.0
            && self.max_std_center_lane > 0.0
            && self.max_angle_center_lane > 0.0
            && self.penalty_reward <= 0.0;
        if ok {
            Ok(())
        } else {
            Err(MdpError::InvalidRewardParams(*self))
        }
    }

    pub fn target_speed_ms(&self) -> f64 {
        self.target_speed / KMH_PER_MS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub collision: f64,
    pub efficiency: f64,
    pub lane: f64,
    pub total: f64,
}

/// Speed term: linear ramp up to the target, linear decay to zero at `max_speed`.
pub fn efficiency_reward(speed_ms: f64, params: &RewardParams) -> f64 {
    let v = speed_ms * KMH_PER_MS;
    if v < params.min_speed {
        0.0
    } else if v <= params.target_speed {
        v / params.target_speed
    } else {
        (1.0 - (v - params.target_speed) / (params.max_speed - params.target_speed)).max(0.0)
    }
}

/// Lane term: product of the offset, heading and oscillation factors.
pub fn lane_reward(lateral: f64, heading_error: f64, center_std: f64, params: &RewardParams) -> f64 {
    let offset = (1.0 - lateral.abs() / params.max_distance).max(0.0);
    let angle = (1.0 - heading_error.abs().to_degrees() / params.max_angle_center_lane).max(0.0);
    let wobble = (1.0 - center_std / params.max_std_center_lane).max(0.0);
    offset * angle * wobble
}

pub fn compute_reward(
    prev: &SceneSnapshot,
    action: Control,
    next: &SceneSnapshot,
    params: &RewardParams,
    center_std: f64,
) -> Result<RewardBreakdown, MdpError> {
    let inputs = [
        action.throttle,
        action.steering,
        next.ego.speed,
        next.frame.lateral,
        next.frame.heading_error,
        center_std,
        prev.ego.speed,
    ];
    if inputs.iter().any(|v| !v.is_finite()) {
        return Err(MdpError::NonFinite("reward input"));
    }
    let collision = if next.collision.is_some() { params.penalty_reward } else { 0.0 };
    let efficiency = efficiency_reward(next.ego.speed, params);
    let lane = lane_reward(next.frame.lateral, next.frame.heading_error, center_std, params);
    Ok(RewardBreakdown {
        collision,
        efficiency,
        lane,
        total: collision + efficiency + lane,
    })
}

/// Population standard deviation over a sliding window.
#[derive(Debug, Clone)]
pub struct RollingStd {
    window: usize,
    values: VecDeque<f64>,
}

impl RollingStd {
    pub const DEFAULT_WINDOW: usize = 50;

    pub fn new(window: usize) -> Self {
        assert!(window > 0, "window must be positive");
        Self {
            window,
            values: VecDeque::with_capacity(window),
        }
    }

    pub fn push(&mut self, value: f64) -> f64 {
        if self.values.len() == self.window {
            self.values.pop_front();
        }
        self.values.push_back(value);
        self.std()
    }

    pub fn std(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.values.iter().sum::<f64>() / n as f64;
        (self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt()
    }

    pub fn clear(&mut self) {
        self.values.clear();
    }
}

impl Default for RollingStd {
    fn default() -> Self {
        Self::new(Self::DEFAULT_WINDOW)
    }
}
