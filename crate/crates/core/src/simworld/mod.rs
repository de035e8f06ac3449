//! Deterministic 2D driving world.
//!
//! The world frame is right-handed: x east, y north, headings counter-clockwise
//! from +x. Steering follows the usual vehicle convention where a positive
//! input turns right.

mod dynamics;
mod frame;
mod geometry;
mod map;
mod objects;
mod world;

use thiserror::Error;

pub use dynamics::{step_dynamics, yaw_rate, Control, EgoState, VehicleParams};
pub use frame::{lane_frame, LaneFrame};
pub use geometry::{wrap_angle, Polyline, Pose, Projection, Vec2};
pub use map::{load_map, BundledMap, MapDocument, WorldMap, MAP_FORMAT_VERSION};
pub use objects::{
    advance_objects, check_collision, Behavior, CollisionEvent, CriticalObject, CriticalObjectSpec,
    ObjectKind, ObjectPhase, SpawnJitter,
};
pub use world::{SceneSnapshot, SimConfig, World};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("map document does not parse: {0}")]
    MapParse(#[source] serde_json::Error),
    #[error("unsupported map format {0} (expected {MAP_FORMAT_VERSION})")]
    MapFormat(u32),
    #[error("{kind} {index}: point {point} repeats its predecessor")]
    DegeneratePolyline {
        kind: &'static str,
        index: usize,
        point: usize,
    },
    #[error("route {route}: waypoint {waypoint} is not on any lane")]
    WaypointOffLane { route: usize, waypoint: usize },
    #[error("invalid map: {0}")]
    MapInvalid(String),
    #[error("route {0} does not exist")]
    UnknownRoute(usize),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
}
