use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dynamics::{step_dynamics, Control, EgoState, VehicleParams};
use super::frame::{lane_frame, LaneFrame};
use super::geometry::Polyline;
use super::map::WorldMap;
use super::objects::{advance_objects, check_collision, CollisionEvent, CriticalObject};
use super::SimError;

/// Ground-truth view of the world at one control step.
#[derive(Debug, Clone)]
pub struct SceneSnapshot {
    pub t: u64,
    pub ego: EgoState,
    pub objects: Vec<CriticalObject>,
    pub route: Arc<Polyline>,
    pub frame: LaneFrame,
    /// Collision detected on the transition into this snapshot.
    pub collision: Option<CollisionEvent>,
}

impl SceneSnapshot {
    /// Route length still ahead of the ego, meters.
    pub fn remaining(&self) -> f64 {
        (self.route.length() - self.frame.progress).max(0.0)
    }
}

/// World stepping options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub vehicle: VehicleParams,
    /// Control period, seconds.
    pub dt: f64,
    /// Ego speed at episode start, m/s.
    pub initial_speed: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            vehicle: VehicleParams::default(),
            dt: 0.05,
            initial_speed: 0.0,
        }
    }
}

/// Single-owner world instance for one episode.
#[derive(Debug, Clone)]
pub struct World {
    map: Arc<WorldMap>,
    config: SimConfig,
    route_index: usize,
    route: Arc<Polyline>,
    ego: EgoState,
    objects: Vec<CriticalObject>,
    t: u64,
    collision: Option<CollisionEvent>,
}

impl World {
    /// Starts an episode on `route_index`; `seed` drives object activation and jitter.
    pub fn new(map: Arc<WorldMap>, config: SimConfig, route_index: usize, seed: u64) -> Result<Self, SimError> {
        let route = map
            .routes
            .get(route_index)
            .cloned()
            .ok_or(SimError::UnknownRoute(route_index))?;
        let start = route.points()[0];
        let ego = EgoState {
            x: start.x,
            y: start.y,
            heading: route.segment_heading(0),
            speed: config.initial_speed,
            steering: 0.0,
            throttle: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let objects = map
            .spawns_for_route(route_index)
            .filter_map(|spec| CriticalObject::spawn(spec, &mut rng))
            .collect();
        Ok(Self {
            map,
            config,
            route_index,
            route,
            ego,
            objects,
            t: 0,
            collision: None,
        })
    }

    /// Picks a route uniformly from `seed`, then spawns as in [`World::new`].
    pub fn random_route(map: Arc<WorldMap>, config: SimConfig, seed: u64) -> Result<Self, SimError> {
        let route = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_7a).random_range(0..map.routes.len());
        Self::new(map, config, route, seed)
    }

    pub fn map(&self) -> &Arc<WorldMap> {
        &self.map
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn route_index(&self) -> usize {
        self.route_index
    }

    pub fn ego(&self) -> &EgoState {
        &self.ego
    }

    pub fn objects(&self) -> &[CriticalObject] {
        &self.objects
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn snapshot(&self) -> SceneSnapshot {
        SceneSnapshot {
            t: self.t,
            ego: self.ego,
            objects: self.objects.clone(),
            route: Arc::clone(&self.route),
            frame: lane_frame(&self.ego, &self.route),
            collision: self.collision,
        }
    }

    /// Applies `control` for one period: ego first, then scripted objects, then the collision test.
    pub fn step(&mut self, control: Control) -> Result<SceneSnapshot, SimError> {
        let dt = self.config.dt;
        self.ego = step_dynamics(&self.ego, control, dt, &self.config.vehicle)?;
        advance_objects(&mut self.objects, &self.ego, dt);
        self.collision = check_collision(&self.ego, self.config.vehicle.radius, &self.objects);
        self.t += 1;
        Ok(self.snapshot())
    }
}
