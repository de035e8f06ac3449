use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dynamics::EgoState;
use super::geometry::{Pose, Vec2};
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Vehicle,
    Pedestrian,
}

impl ObjectKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectKind::Vehicle => "vehicle",
            ObjectKind::Pedestrian => "pedestrian",
        }
    }
}

/// Scripted motion. Every script is a pure function of the spec, the trigger
/// time and elapsed simulation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Behavior {
    Stationary,
    /// Moves along its heading at the spawn speed from t = 0.
    ConstantVelocity,
    /// Waits until triggered, then drives forward while shifting `lateral_shift`
    /// meters to its left (negative: right) over `shift_duration` seconds.
    /// Afterwards it brakes to a stop and holds for `hold_time` seconds before
    /// driving off at the spawn speed. `hold_time = 0` skips the stop.
    CutIn {
        lateral_shift: f64,
        shift_duration: f64,
        hold_time: f64,
        brake_decel: f64,
    },
    /// Waits until triggered, then walks `crossing_distance` meters along its heading and stops.
    Crossing { crossing_distance: f64 },
}

/// Per-episode randomization applied when an object is spawned.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpawnJitter {
    /// ± meters along the spawn heading.
    pub along: f64,
    /// ± meters on the trigger distance.
    pub trigger: f64,
    /// ± fraction of the nominal speed.
    pub speed_frac: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalObjectSpec {
    pub id: u32,
    pub kind: ObjectKind,
    pub pose: Pose,
    /// Nominal speed, m/s.
    pub speed: f64,
    pub radius: f64,
    pub behavior: Behavior,
    /// Ego distance (center to center) that activates triggered scripts, meters.
    pub trigger_distance: f64,
    /// Routes this spawn belongs to; empty means all routes.
    #[serde(default)]
    pub routes: Vec<usize>,
    #[serde(default = "one")]
    pub spawn_probability: f64,
    #[serde(default)]
    pub jitter: SpawnJitter,
}

impl CriticalObjectSpec {
    pub(crate) fn validate(&self) -> Result<(), SimError> {
        let bad = |reason: &str| {
            Err(SimError::MapInvalid(format!("object {}: {reason}", self.id)))
        };
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return bad("radius must be positive");
        }
        if !(self.speed.is_finite() && self.speed >= 0.0) {
            return bad("speed must be non-negative");
        }
        if !(self.trigger_distance.is_finite() && self.trigger_distance >= 0.0) {
            return bad("trigger_distance must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.spawn_probability) {
            return bad("spawn_probability must lie in [0, 1]");
        }
        match self.behavior {
            Behavior::CutIn { shift_duration, hold_time, brake_decel, .. } => {
                if !(shift_duration > 0.0 && hold_time >= 0.0 && brake_decel > 0.0) {
                    return bad("cut_in needs shift_duration > 0, hold_time >= 0, brake_decel > 0");
                }
            }
            Behavior::Crossing { crossing_distance } if crossing_distance < 0.0 => {
                return bad("crossing_distance must be non-negative");
            }
            _ => {}
        }
        Ok(())
    }
}

/// Progress through a behavior script.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum ObjectPhase {
    Waiting,
    Shifting { elapsed: f64 },
    Braking,
    Holding { elapsed: f64 },
    Cruising,
    Walking { walked: f64 },
    Done,
}

/// Live object state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalObject {
    pub id: u32,
    pub kind: ObjectKind,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    /// Current velocity in the world frame, m/s.
    pub velocity: Vec2,
    pub radius: f64,
    pub behavior: Behavior,
    pub trigger_distance: f64,
    pub phase: ObjectPhase,
    /// Nominal speed after jitter.
    pub base_speed: f64,
    /// Current forward speed (differs from `base_speed` while braking or holding).
    pub forward_speed: f64,
}

impl CriticalObject {
    /// Draws activation and jitter from `rng`; `None` when the spawn is skipped this episode.
    pub fn spawn<R: Rng>(spec: &CriticalObjectSpec, rng: &mut R) -> Option<Self> {
        // Always draw the same number of variates so later spawns see a stable stream.
        let roll: f64 = rng.random();
        let along: f64 = rng.random_range(-1.0..=1.0) * spec.jitter.along;
        let trig: f64 = rng.random_range(-1.0..=1.0) * spec.jitter.trigger;
        let speed_scale: f64 = 1.0 + rng.random_range(-1.0..=1.0) * spec.jitter.speed_frac;
        if roll >= spec.spawn_probability {
            return None;
        }
        let base_speed = spec.speed * speed_scale;
        let pos = spec.pose.position() + Vec2::from_heading(spec.pose.heading) * along;
        Some(Self::at(spec, pos, base_speed, (spec.trigger_distance + trig).max(0.0)))
    }

    /// Spawns without randomization.
    pub fn from_spec(spec: &CriticalObjectSpec) -> Self {
        Self::at(spec, spec.pose.position(), spec.speed, spec.trigger_distance)
    }

    fn at(spec: &CriticalObjectSpec, pos: Vec2, base_speed: f64, trigger_distance: f64) -> Self {
        let mut obj = Self {
            id: spec.id,
            kind: spec.kind,
            x: pos.x,
            y: pos.y,
            heading: spec.pose.heading,
            velocity: Vec2::ZERO,
            radius: spec.radius,
            behavior: spec.behavior,
            trigger_distance,
            phase: ObjectPhase::Waiting,
            base_speed,
            forward_speed: 0.0,
        };
        match spec.behavior {
            Behavior::Stationary => obj.phase = ObjectPhase::Done,
            Behavior::ConstantVelocity => {
                obj.phase = ObjectPhase::Cruising;
                obj.forward_speed = base_speed;
                obj.velocity = Vec2::from_heading(obj.heading) * base_speed;
            }
            _ => {}
        }
        obj
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }

    /// Advances the script by `dt` seconds.
    pub fn advance(&mut self, ego: &EgoState, dt: f64) {
        let forward = Vec2::from_heading(self.heading);
        if self.phase == ObjectPhase::Waiting
            && ego.position().distance(self.position()) <= self.trigger_distance
        {
            self.phase = match self.behavior {
                Behavior::CutIn { .. } => {
                    self.forward_speed = self.base_speed;
                    ObjectPhase::Shifting { elapsed: 0.0 }
                }
                Behavior::Crossing { .. } => ObjectPhase::Walking { walked: 0.0 },
                _ => self.phase,
            };
        }

        let mut velocity = Vec2::ZERO;
        match (self.behavior, self.phase) {
            (Behavior::CutIn { lateral_shift, shift_duration, hold_time, brake_decel }, phase) => {
                match phase {
                    ObjectPhase::Shifting { elapsed } => {
                        let step = dt.min(shift_duration - elapsed);
                        let lateral = forward.perp() * (lateral_shift / shift_duration);
                        // Lateral motion only for the part of dt still inside the shift window.
                        let disp = forward * (self.forward_speed * dt) + lateral * step;
                        velocity = disp * (1.0 / dt);
                        let elapsed = elapsed + dt;
                        self.phase = if elapsed >= shift_duration - 1e-12 {
                            if hold_time > 0.0 {
                                ObjectPhase::Braking
                            } else {
                                ObjectPhase::Cruising
                            }
                        } else {
                            ObjectPhase::Shifting { elapsed }
                        };
                    }
                    ObjectPhase::Braking => {
                        let v0 = self.forward_speed;
                        let v1 = (v0 - brake_decel * dt).max(0.0);
                        velocity = forward * (0.5 * (v0 + v1));
                        self.forward_speed = v1;
                        if v1 == 0.0 {
                            self.phase = ObjectPhase::Holding { elapsed: 0.0 };
                        }
                    }
                    ObjectPhase::Holding { elapsed } => {
                        let elapsed = elapsed + dt;
                        if elapsed >= hold_time - 1e-12 {
                            self.forward_speed = self.base_speed;
                            self.phase = ObjectPhase::Cruising;
                        } else {
                            self.phase = ObjectPhase::Holding { elapsed };
                        }
                    }
                    ObjectPhase::Cruising => velocity = forward * self.forward_speed,
                    _ => {}
                }
            }
            (Behavior::Crossing { crossing_distance }, ObjectPhase::Walking { walked }) => {
                let step = (self.base_speed * dt).min(crossing_distance - walked).max(0.0);
                velocity = forward * (step / dt);
                let walked = walked + step;
                self.phase = if walked >= crossing_distance - 1e-12 {
                    ObjectPhase::Done
                } else {
                    ObjectPhase::Walking { walked }
                };
            }
            (Behavior::ConstantVelocity, _) => velocity = forward * self.base_speed,
            _ => {}
        }
        self.x += velocity.x * dt;
        self.y += velocity.y * dt;
        // Report the velocity the object will keep next step (used by predictors).
        self.velocity = match self.phase {
            ObjectPhase::Holding { .. } | ObjectPhase::Done | ObjectPhase::Waiting => Vec2::ZERO,
            ObjectPhase::Walking { .. } => forward * self.base_speed,
            ObjectPhase::Cruising => forward * self.forward_speed,
            _ => velocity,
        };
    }
}

/// Advances every object by `dt` seconds.
pub fn advance_objects(objects: &mut [CriticalObject], ego: &EgoState, dt: f64) {
    for obj in objects {
        obj.advance(ego, dt);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub object_id: u32,
    /// Center-to-center distance at detection.
    pub distance: f64,
}

/// Disc test; touching discs collide. Reports the lowest colliding id so the
/// result does not depend on list order.
pub fn check_collision(ego: &EgoState, ego_radius: f64, objects: &[CriticalObject]) -> Option<CollisionEvent> {
    let p = ego.position();
    objects
        .iter()
        .filter_map(|o| {
            let d = p.distance(o.position());
            (d <= ego_radius + o.radius).then_some(CollisionEvent { object_id: o.id, distance: d })
        })
        .min_by_key(|e| e.object_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec(kind: ObjectKind, pose: Pose, speed: f64, behavior: Behavior, trigger: f64) -> CriticalObjectSpec {
        CriticalObjectSpec {
            id: 1,
            kind,
            pose,
            speed,
            radius: 1.0,
            behavior,
            trigger_distance: trigger,
            routes: vec![],
            spawn_probability: 1.0,
            jitter: SpawnJitter::default(),
        }
    }

    #[test]
    fn stationary_pedestrian_does_not_move() {
        let s = spec(ObjectKind::Pedestrian, Pose { x: 3.0, y: 4.0, heading: 1.0 }, 1.0, Behavior::Stationary, 10.0);
        let mut obj = CriticalObject::from_spec(&s);
        let ego = EgoState { x: 3.0, y: 4.0, ..Default::default() };
        for _ in 0..10 {
            obj.advance(&ego, 0.1);
        }
        assert_eq!((obj.x, obj.y, obj.heading), (3.0, 4.0, 1.0));
    }

    #[test]
    fn constant_velocity_advances_linearly() {
        let s = spec(ObjectKind::Vehicle, Pose::default(), 5.0, Behavior::ConstantVelocity, 0.0);
        let mut obj = CriticalObject::from_spec(&s);
        let ego = EgoState { x: -100.0, ..Default::default() };
        advance_objects(std::slice::from_mut(&mut obj), &ego, 0.1);
        assert_relative_eq!(obj.x, 0.5, epsilon = 1e-12);
        assert_eq!(obj.y, 0.0);
    }

    #[test]
    fn cut_in_waits_beyond_trigger() {
        let behavior = Behavior::CutIn { lateral_shift: 3.5, shift_duration: 1.5, hold_time: 2.0, brake_decel: 5.0 };
        let s = spec(ObjectKind::Vehicle, Pose { x: 50.0, y: -3.5, heading: 0.0 }, 5.0, behavior, 20.0);
        let mut obj = CriticalObject::from_spec(&s);
        let ego = EgoState::default();
        for _ in 0..100 {
            obj.advance(&ego, 0.05);
        }
        assert_eq!((obj.x, obj.y), (50.0, -3.5));
        assert_eq!(obj.phase, ObjectPhase::Waiting);
    }

    #[test]
    fn cut_in_script_runs_through_phases() {
        let behavior = Behavior::CutIn { lateral_shift: 3.5, shift_duration: 1.5, hold_time: 2.0, brake_decel: 5.0 };
        let s = spec(ObjectKind::Vehicle, Pose { x: 10.0, y: -3.5, heading: 0.0 }, 5.0, behavior, 20.0);
        let mut obj = CriticalObject::from_spec(&s);
        let ego = EgoState::default();
        // 1.5 s of shifting at dt = 0.05.
        for _ in 0..30 {
            obj.advance(&ego, 0.05);
        }
        assert_relative_eq!(obj.y, 0.0, epsilon = 1e-9);
        assert_relative_eq!(obj.x, 10.0 + 7.5, epsilon = 1e-9);
        assert_eq!(obj.phase, ObjectPhase::Braking);
        // Brake 5 → 0 at 5 m/s² takes 1 s and 2.5 m.
        for _ in 0..20 {
            obj.advance(&ego, 0.05);
        }
        assert_relative_eq!(obj.x, 20.0, epsilon = 1e-9);
        assert!(matches!(obj.phase, ObjectPhase::Holding { .. }));
        for _ in 0..40 {
            obj.advance(&ego, 0.05);
        }
        assert_eq!(obj.phase, ObjectPhase::Cruising);
        assert_relative_eq!(obj.x, 20.0, epsilon = 1e-9);
        obj.advance(&ego, 0.1);
        assert_relative_eq!(obj.x, 20.5, epsilon = 1e-9);
    }

    #[test]
    fn crossing_walks_then_stops() {
        let s = spec(
            ObjectKind::Pedestrian,
            Pose { x: 0.0, y: 5.0, heading: -std::f64::consts::FRAC_PI_2 },
            2.0,
            Behavior::Crossing { crossing_distance: 10.0 },
            30.0,
        );
        let mut obj = CriticalObject::from_spec(&s);
        let ego = EgoState { x: -20.0, ..Default::default() };
        for _ in 0..200 {
            obj.advance(&ego, 0.05);
        }
        assert_relative_eq!(obj.y, -5.0, epsilon = 1e-9);
        assert_eq!(obj.phase, ObjectPhase::Done);
        assert_eq!(obj.velocity, Vec2::ZERO);
    }

    #[test]
    fn spawn_is_deterministic_per_seed() {
        use rand::SeedableRng;
        let mut s = spec(ObjectKind::Vehicle, Pose::default(), 5.0, Behavior::ConstantVelocity, 0.0);
        s.jitter = SpawnJitter { along: 5.0, trigger: 2.0, speed_frac: 0.2 };
        let a = CriticalObject::spawn(&s, &mut rand_chacha::ChaCha8Rng::seed_from_u64(9));
        let b = CriticalObject::spawn(&s, &mut rand_chacha::ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    fn obj_at(id: u32, x: f64, y: f64, r: f64) -> CriticalObject {
        let mut o = CriticalObject::from_spec(&spec(ObjectKind::Vehicle, Pose { x, y, heading: 0.0 }, 0.0, Behavior::Stationary, 0.0));
        o.id = id;
        o.radius = r;
        o
    }

    #[test]
    fn collision_cases() {
        let ego = EgoState::default();
        assert_eq!(check_collision(&ego, 1.0, &[obj_at(1, 5.0, 0.0, 1.0)]), None);
        assert_eq!(check_collision(&ego, 1.0, &[obj_at(1, 1.5, 0.0, 1.0)]).map(|e| e.object_id), Some(1));
        // Tangent discs collide.
        assert!(check_collision(&ego, 1.0, &[obj_at(3, 2.0, 0.0, 1.0)]).is_some());
    }

    proptest! {
        #[test]
        fn collision_ignores_order(
            pts in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64, 0.2..2.0f64), 1..6),
            rot in 0usize..6,
        ) {
            let ego = EgoState::default();
            let objs: Vec<_> = pts.iter().enumerate().map(|(i, &(x, y, r))| obj_at(i as u32, x, y, r)).collect();
            let mut rotated = objs.clone();
            rotated.rotate_left(rot % objs.len());
            rotated.reverse();
            prop_assert_eq!(check_collision(&ego, 1.0, &objs), check_collision(&ego, 1.0, &rotated));
        }
    }
}
