use serde::{Deserialize, Serialize};

use crate::advisor::MetaAction;
use crate::simworld::{SceneSnapshot, Vec2};

use super::MdpError;

/// Look-ahead waypoints in the observation.
pub const LOOKAHEAD: usize = 5;
/// 2·K waypoint coordinates + steering, throttle, speed + 5-way meta one-hot.
pub const OBS_DIM: usize = 2 * LOOKAHEAD + 3 + MetaAction::COUNT;

/// Policy input: route preview in the ego frame, physical state, and the advisor's meta-action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Next waypoints relative to the ego, (forward, left) in meters.
    pub waypoints: [[f64; 2]; LOOKAHEAD],
    pub steering: f64,
    pub throttle: f64,
    /// m/s, unnormalized.
    pub speed: f64,
    pub meta: [f64; MetaAction::COUNT],
}

impl Observation {
    pub fn to_array(&self) -> [f64; OBS_DIM] {
        let mut out = [0.0; OBS_DIM];
        for (i, w) in self.waypoints.iter().enumerate() {
            out[2 * i] = w[0];
            out[2 * i + 1] = w[1];
        }
        let base = 2 * LOOKAHEAD;
        out[base] = self.steering;
        out[base + 1] = self.throttle;
        out[base + 2] = self.speed;
        out[base + 3..].copy_from_slice(&self.meta);
        out
    }

    pub fn from_slice(values: &[f64]) -> Result<Self, MdpError> {
        if values.len() != OBS_DIM {
            return Err(MdpError::ObservationLength(values.len()));
        }
        let mut waypoints = [[0.0; 2]; LOOKAHEAD];
        for (i, w) in waypoints.iter_mut().enumerate() {
            *w = [values[2 * i], values[2 * i + 1]];
        }
        let base = 2 * LOOKAHEAD;
        let mut meta = [0.0; MetaAction::COUNT];
        meta.copy_from_slice(&values[base + 3..]);
        Ok(Self {
            waypoints,
            steering: values[base],
            throttle: values[base + 1],
            speed: values[base + 2],
            meta,
        })
    }

    /// Decodes the one-hot block; `None` unless exactly one entry is 1 and the rest 0.
    pub fn meta_action(&self) -> Option<MetaAction> {
        MetaAction::from_one_hot(&self.meta)
    }
}

/// Builds the policy observation from a scene snapshot and the current meta-action.
pub fn build_observation(snapshot: &SceneSnapshot, meta: MetaAction) -> Result<Observation, MdpError> {
    let route = &snapshot.route;
    let points = route.points();
    if points.is_empty() {
        return Err(MdpError::EmptyRoute);
    }
    let cumulative = route.cumulative();
    let s = snapshot.frame.progress;
    let first_ahead = cumulative.partition_point(|&c| c <= s);

    let ego = snapshot.ego.position();
    let heading = snapshot.ego.heading;
    let mut waypoints = [[0.0; 2]; LOOKAHEAD];
    let last = *points.last().expect("non-empty");
    for (k, slot) in waypoints.iter_mut().enumerate() {
        let w = points.get(first_ahead + k).copied().unwrap_or(last);
        let rel: Vec2 = (w - ego).rotate(-heading);
        *slot = [rel.x, rel.y];
    }
    let obs = Observation {
        waypoints,
        steering: snapshot.ego.steering,
        throttle: snapshot.ego.throttle,
        speed: snapshot.ego.speed,
        meta: meta.one_hot(),
    };
    if obs.to_array().iter().any(|v| !v.is_finite()) {
        return Err(MdpError::NonFinite("observation"));
    }
    Ok(obs)
}
