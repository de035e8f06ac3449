use serde::{Deserialize, Serialize};

use super::dynamics::EgoState;
use super::geometry::{wrap_angle, Polyline};

/// Ego pose expressed relative to the active route.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LaneFrame {
    /// Signed lateral offset, meters; positive to the left of the travel direction.
    pub lateral: f64,
    /// Heading error against the closest segment, radians in (−π, π].
    pub heading_error: f64,
    /// Arc length of the projection from the route start, meters.
    pub progress: f64,
}

/// Projects the ego pose onto `route`. Ties at shared vertices go to the later segment.
pub fn lane_frame(ego: &EgoState, route: &Polyline) -> LaneFrame {
    let p = ego.position();
    let proj = route.project(p);
    let dir = route.segment_direction(proj.segment);
    let side = dir.cross(p - proj.point);
    let lateral = if side < 0.0 { -proj.distance } else { proj.distance };
    LaneFrame {
        lateral,
        heading_error: wrap_angle(ego.heading - route.segment_heading(proj.segment)),
        progress: proj.arc_length,
    }
}
