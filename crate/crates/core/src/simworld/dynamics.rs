use serde::{Deserialize, Serialize};

use super::geometry::{wrap_angle, Vec2};
use super::SimError;

/// Kinematic bicycle parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    /// Meters.
    pub wheelbase: f64,
    /// Front-wheel angle at full steering input, degrees.
    pub max_steer_deg: f64,
    /// m/s² at full throttle or full brake.
    pub max_accel: f64,
    /// Physical speed cap, m/s.
    pub max_speed: f64,
    /// Collision disc radius, meters.
    pub radius: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 2.5,
            max_steer_deg: 35.0,
            max_accel: 3.0,
            max_speed: 15.0,
            radius: 1.0,
        }
    }
}

impl VehicleParams {
    pub fn max_steer_rad(&self) -> f64 {
        self.max_steer_deg.to_radians()
    }
}

/// Ego vehicle state. `steering` and `throttle` hold the last applied control.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EgoState {
    pub x: f64,
    pub y: f64,
    /// Radians in (−π, π], counter-clockwise from +x.
    pub heading: f64,
    /// m/s, never negative.
    pub speed: f64,
    pub steering: f64,
    pub throttle: f64,
}

impl EgoState {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::from_heading(self.heading) * self.speed
    }
}

/// Normalized control input: `throttle` < 0 brakes; `steering` > 0 turns right (clockwise).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Control {
    pub throttle: f64,
    pub steering: f64,
}

impl Control {
    pub const fn new(throttle: f64, steering: f64) -> Self {
        Self { throttle, steering }
    }

    /// Clamps both channels into [−1, 1].
    pub fn clamped(self) -> Self {
        Self::new(self.throttle.clamp(-1.0, 1.0), self.steering.clamp(-1.0, 1.0))
    }
}

/// Signed yaw rate (rad/s, counter-clockwise positive) for the given speed and steering input.
pub fn yaw_rate(speed: f64, steering: f64, params: &VehicleParams) -> f64 {
    -(speed / params.wheelbase) * (steering * params.max_steer_rad()).tan()
}

/// One semi-implicit Euler step: speed first, then heading, then position.
/// Out-of-range controls are clamped into [−1, 1].
pub fn step_dynamics(
    ego: &EgoState,
    control: Control,
    dt: f64,
    params: &VehicleParams,
) -> Result<EgoState, SimError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SimError::NonFinite("dt"));
    }
    if !control.throttle.is_finite() || !control.steering.is_finite() {
        return Err(SimError::NonFinite("control"));
    }
    if !(ego.x.is_finite() && ego.y.is_finite() && ego.heading.is_finite() && ego.speed.is_finite()) {
        return Err(SimError::NonFinite("ego state"));
    }
    let control = control.clamped();
    let accel = control.throttle * params.max_accel;
    let speed = (ego.speed + accel * dt).clamp(0.0, params.max_speed);
    let heading = wrap_angle(ego.heading + yaw_rate(speed, control.steering, params) * dt);
    let (sin, cos) = heading.sin_cos();
    Ok(EgoState {
        x: ego.x + speed * cos * dt,
        y: ego.y + speed * sin * dt,
        heading,
        speed,
        steering: control.steering,
        throttle: control.throttle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_input_at_rest_is_identity() {
        let ego = EgoState::default();
        let next = step_dynamics(&ego, Control::new(0.0, 0.0), 0.05, &VehicleParams::default()).unwrap();
        assert_eq!(next, ego);
    }

    #[test]
    fn full_throttle_from_rest_matches_discrete_sum() {
        let params = VehicleParams::default();
        let dt = 0.05;
        let mut ego = EgoState::default();
        for _ in 0..20 {
            ego = step_dynamics(&ego, Control::new(1.0, 0.0), dt, &params).unwrap();
        }
        // Oracle: x = dt · Σ_{k=1..20} (a·dt·k)
        let oracle: f64 = (1..=20).map(|k| dt * (3.0 * dt * k as f64)).sum();
        assert_relative_eq!(ego.speed, 3.0, epsilon = 1e-12);
        assert_relative_eq!(ego.x, oracle, epsilon = 1e-12);
        assert_relative_eq!(oracle, 1.575, epsilon = 1e-12);
        assert_eq!(ego.y, 0.0);
    }

    #[test]
    fn yaw_rate_magnitude_and_sign() {
        let params = VehicleParams::default();
        let expected = (10.0 / 2.5) * 35f64.to_radians().tan();
        assert_relative_eq!(expected, 2.801, epsilon = 5e-4);
        // Full left input (negative) turns counter-clockwise.
        assert_relative_eq!(yaw_rate(10.0, -1.0, &params), expected, epsilon = 1e-12);
        assert_relative_eq!(yaw_rate(10.0, 1.0, &params), -expected, epsilon = 1e-12);
    }

    #[test]
    fn braking_stops_at_zero() {
        let params = VehicleParams::default();
        let ego = EgoState { speed: 0.1, ..Default::default() };
        let next = step_dynamics(&ego, Control::new(-1.0, 0.0), 0.05, &params).unwrap();
        assert_eq!(next.speed, 0.0);
    }

    #[test]
    fn rejects_non_finite() {
        let params = VehicleParams::default();
        let ego = EgoState::default();
        assert!(step_dynamics(&ego, Control::new(f64::NAN, 0.0), 0.05, &params).is_err());
        assert!(step_dynamics(&ego, Control::new(0.0, 0.0), 0.0, &params).is_err());
        assert!(step_dynamics(&ego, Control::new(0.0, f64::INFINITY), 0.05, &params).is_err());
    }

    proptest! {
        #[test]
        fn speed_and_heading_stay_in_range(
            speed in 0.0..15.0f64,
            heading in -3.2..3.2f64,
            throttle in -1.0..1.0f64,
            steering in -1.0..1.0f64,
        ) {
            let params = VehicleParams::default();
            let ego = EgoState { heading: wrap_angle(heading), speed, ..Default::default() };
            let next = step_dynamics(&ego, Control::new(throttle, steering), 0.05, &params).unwrap();
            prop_assert!(next.speed >= 0.0 && next.speed <= params.max_speed);
            prop_assert!(next.heading > -std::f64::consts::PI && next.heading <= std::f64::consts::PI);
        }

        #[test]
        fn straight_steering_keeps_heading(speed in 0.0..15.0f64, throttle in -1.0..1.0f64) {
            let ego = EgoState { heading: 0.7, speed, ..Default::default() };
            let next = step_dynamics(&ego, Control::new(throttle, 0.0), 0.05, &VehicleParams::default()).unwrap();
            prop_assert_eq!(next.heading, 0.7);
        }

        #[test]
        fn coasting_keeps_speed(speed in 0.0..15.0f64, steering in -1.0..1.0f64) {
            let ego = EgoState { speed, ..Default::default() };
            let next = step_dynamics(&ego, Control::new(0.0, steering), 0.05, &VehicleParams::default()).unwrap();
            prop_assert_eq!(next.speed, speed);
        }
    }
}
