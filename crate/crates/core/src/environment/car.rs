//! Kinematic bicycle model with a rate-limited steering actuator and a
//! speed-dependent lateral grip cap.

use super::geometry::{wrap_angle, Vec2};
use super::EnvError;

#[derive(Clone, Debug, PartialEq)]
pub struct CarParams {
    pub wheelbase: f64,
    /// Distance from the reference point (center of mass) to the rear axle.
    pub rear_axle: f64,
    pub max_wheel_angle: f64,
    /// rad/s
    pub steer_rate: f64,
    /// m/s^2 at full gas
    pub max_accel: f64,
    /// m/s^2 at full brake
    pub max_brake: f64,
    /// m/s^2 of deceleration while coasting
    pub rolling_resistance: f64,
    pub max_speed: f64,
    /// Largest lateral acceleration the tyres can hold, m/s^2.
    pub lateral_grip: f64,
    pub length: f64,
    pub width: f64,
}

impl Default for CarParams {
    fn default() -> Self {
        Self {
            wheelbase: 2.6,
            rear_axle: 1.3,
            max_wheel_angle: 0.45,
            steer_rate: 2.5,
            max_accel: 6.0,
            max_brake: 15.0,
            rolling_resistance: 0.3,
            max_speed: 35.0,
            lateral_grip: 14.0,
            length: 4.5,
            width: 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CarState {
    pub position: Vec2,
    pub heading: f64,
    pub speed: f64,
    pub wheel_angle: f64,
    pub angular_velocity: f64,
    pub velocity_direction: f64,
}

impl CarState {
    pub fn at_rest(position: Vec2, heading: f64) -> Self {
        Self {
            position,
            heading,
            speed: 0.0,
            wheel_angle: 0.0,
            angular_velocity: 0.0,
            velocity_direction: heading,
        }
    }
}

/// Steering in `[-1, 1]` (negative steers left), gas and brake in `[0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ContinuousAction {
    pub steering: f64,
    pub gas: f64,
    pub brake: f64,
}

impl ContinuousAction {
    pub const fn new(steering: f64, gas: f64, brake: f64) -> Self {
        Self {
            steering,
            gas,
            brake,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let check = |name: &'static str, value: f64, lo: f64| {
            if (lo..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(EnvError::ActionOutOfRange { field: name, value })
            }
        };
        check("steering", self.steering, -1.0)?;
        check("gas", self.gas, 0.0)?;
        check("brake", self.brake, 0.0)
    }
}

/// Advances the car by `dt` seconds. Steering `-1` turns left, which in this
/// model means the wheel angle goes positive (counter-clockwise yaw).
pub fn advance(state: &CarState, action: &ContinuousAction, params: &CarParams, dt: f64) -> CarState {
    let target = -action.steering * params.max_wheel_angle;
    let max_delta = params.steer_rate * dt;
    let wheel_angle = (state.wheel_angle + (target - state.wheel_angle).clamp(-max_delta, max_delta))
        .clamp(-params.max_wheel_angle, params.max_wheel_angle);

    let accel = action.gas * params.max_accel
        - action.brake * params.max_brake
        - params.rolling_resistance;
    let speed = (state.speed + accel * dt).clamp(0.0, params.max_speed);

    let slip = (params.rear_axle / params.wheelbase * wheel_angle.tan()).atan();
    let mut yaw_rate = speed / params.rear_axle * slip.sin();
    if speed > 0.0 {
        let cap = params.lateral_grip / speed;
        yaw_rate = yaw_rate.clamp(-cap, cap);
    }
    let heading = wrap_angle(state.heading + yaw_rate * dt);
    let velocity_direction = wrap_angle(heading + slip);
    let position = state.position + Vec2::from_angle(velocity_direction) * (speed * dt);
    CarState {
        position,
        heading,
        speed,
        wheel_angle,
        angular_velocity: yaw_rate,
        velocity_direction,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 1.0 / 50.0;

    #[test]
    fn coasting_at_rest_stays_put() {
        let s = CarState::at_rest(Vec2::new(1.0, 2.0), 0.3);
        let next = advance(&s, &ContinuousAction::default(), &CarParams::default(), DT);
        assert_eq!(next.position, s.position);
        assert_eq!(next.speed, 0.0);
    }

    #[test]
    fn gas_accelerates_straight() {
        let p = CarParams::default();
        let mut s = CarState::at_rest(Vec2::default(), 0.0);
        for _ in 0..50 {
            s = advance(&s, &ContinuousAction::new(0.0, 1.0, 0.0), &p, DT);
        }
        assert!((s.speed - (p.max_accel - p.rolling_resistance)).abs() < 1e-9);
        assert_eq!(s.position.y, 0.0);
        assert!(s.position.x > 0.0);
    }

    #[test]
    fn left_steering_turns_counter_clockwise() {
        let p = CarParams::default();
        let mut s = CarState {
            speed: 10.0,
            ..CarState::at_rest(Vec2::default(), 0.0)
        };
        for _ in 0..25 {
            s = advance(&s, &ContinuousAction::new(-1.0, 0.1, 0.0), &p, DT);
        }
        assert!(s.heading > 0.0);
        assert!(s.angular_velocity > 0.0);
        assert!(s.wheel_angle > 0.0 && s.wheel_angle <= p.max_wheel_angle);
    }

    #[test]
    fn steering_is_rate_limited_and_bounded() {
        let p = CarParams::default();
        let s = CarState::at_rest(Vec2::default(), 0.0);
        let next = advance(&s, &ContinuousAction::new(1.0, 0.0, 0.0), &p, DT);
        assert!((next.wheel_angle + p.steer_rate * DT).abs() < 1e-15);
        let mut s = s;
        for _ in 0..200 {
            s = advance(&s, &ContinuousAction::new(1.0, 0.0, 0.0), &p, DT);
            assert!(s.wheel_angle.abs() <= p.max_wheel_angle);
        }
    }

    #[test]
    fn grip_caps_lateral_acceleration() {
        let p = CarParams::default();
        let s = CarState {
            speed: 30.0,
            wheel_angle: p.max_wheel_angle,
            ..CarState::at_rest(Vec2::default(), 0.0)
        };
        let next = advance(&s, &ContinuousAction::new(-1.0, 1.0, 0.0), &p, DT);
        assert!((next.angular_velocity * next.speed).abs() <= p.lateral_grip + 1e-9);
    }

    #[test]
    fn brake_never_reverses() {
        let s = CarState {
            speed: 0.1,
            ..CarState::at_rest(Vec2::default(), 0.0)
        };
        let next = advance(&s, &ContinuousAction::new(0.0, 0.0, 1.0), &CarParams::default(), DT);
        assert_eq!(next.speed, 0.0);
    }

    #[test]
    fn action_range_checks() {
        assert!(ContinuousAction::new(-1.0, 1.0, 0.0).validate().is_ok());
        assert!(matches!(
            ContinuousAction::new(1.5, 0.0, 0.0).validate(),
            Err(EnvError::ActionOutOfRange { field: "steering", .. })
        ));
        assert!(ContinuousAction::new(0.0, -0.1, 0.0).validate().is_err());
        assert!(ContinuousAction::new(0.0, 0.0, f64::NAN).validate().is_err());
    }
}
