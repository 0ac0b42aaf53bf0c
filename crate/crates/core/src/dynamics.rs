//! Fixed-timestep kinematic plant for the lead and follower vehicles.
//!
//! Both vehicles use the same kinematic bicycle. Speed never goes negative,
//! heading is kept in (-pi, pi] and longitudinal commands are clamped to the
//! actuator limits before integration.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Pose and longitudinal state of one vehicle at one tick.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    /// Radians, counter-clockwise from +x.
    pub heading: f64,
    pub speed: f64,
    pub accel: f64,
    pub tick: u64,
}

impl VehicleState {
    pub fn at_rest(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActuatorLimits {
    pub max_accel: f64,
    /// Positive magnitude.
    pub max_decel: f64,
    pub max_steer: f64,
    pub dt: f64,
    pub wheelbase: f64,
    /// First-order actuator lag time constant in seconds. `None` applies
    /// commands instantly.
    pub accel_lag: Option<f64>,
}

impl Default for ActuatorLimits {
    fn default() -> Self {
        Self {
            max_accel: 3.5,
            max_decel: 8.0,
            max_steer: std::f64::consts::FRAC_PI_6,
            dt: 0.05,
            wheelbase: 2.8,
            accel_lag: None,
        }
    }
}

impl ActuatorLimits {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.max_accel > 0.0) {
            return bad("max_accel must be positive");
        }
        if !(self.max_decel >= 6.0) {
            return bad("max_decel must be at least 6 m/s^2");
        }
        if !(self.max_steer > 0.0) || !(self.wheelbase > 0.0) {
            return bad("max_steer and wheelbase must be positive");
        }
        if let Some(tau) = self.accel_lag {
            if !(tau > 0.0) {
                return bad("accel_lag must be positive when set");
            }
        }
        Ok(())
    }
}

/// Longitudinal part of a command: either an acceleration request or a
/// speed setpoint the plant reaches as fast as the limits allow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Longitudinal {
    Accel(f64),
    Speed(f64),
}

impl Longitudinal {
    pub fn value(&self) -> f64 {
        match *self {
            Longitudinal::Accel(a) => a,
            Longitudinal::Speed(v) => v,
        }
    }

    /// Acceleration this command asks of a vehicle currently at `speed`.
    pub fn as_accel(&self, speed: f64, dt: f64) -> f64 {
        match *self {
            Longitudinal::Accel(a) => a,
            Longitudinal::Speed(v) => (v - speed) / dt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerCommand {
    pub longitudinal: Longitudinal,
    pub steer: f64,
}

impl ControllerCommand {
    pub fn accel(accel: f64, steer: f64) -> Self {
        Self {
            longitudinal: Longitudinal::Accel(accel),
            steer,
        }
    }

    pub fn speed(speed: f64, steer: f64) -> Self {
        Self {
            longitudinal: Longitudinal::Speed(speed),
            steer,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.longitudinal.value().is_finite() && self.steer.is_finite()
    }
}

pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    // rem_euclid maps -pi to pi already; keep the half-open interval
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

/// Advances one vehicle by one tick.
///
/// Position is integrated with the mean of the old and new speed along the
/// new heading, which is exact for piecewise-constant acceleration on a
/// straight line.
pub fn step_vehicle(
    state: &VehicleState,
    command: &ControllerCommand,
    limits: &ActuatorLimits,
) -> Result<VehicleState> {
    if !command.is_finite() {
        return Err(SimError::NonFiniteCommand(format!("{command:?}")));
    }
    let dt = limits.dt;
    let requested = command
        .longitudinal
        .as_accel(state.speed, dt)
        .clamp(-limits.max_decel, limits.max_accel);
    let actuated = match limits.accel_lag {
        Some(tau) => state.accel + (requested - state.accel) * (dt / tau).min(1.0),
        None => requested,
    };
    let steer = command.steer.clamp(-limits.max_steer, limits.max_steer);

    let raw_speed = state.speed + actuated * dt;
    let speed = raw_speed.max(0.0);
    let accel = if raw_speed < 0.0 {
        (speed - state.speed) / dt
    } else {
        actuated
    };
    let heading = normalize_angle(state.heading + state.speed / limits.wheelbase * steer.tan() * dt);
    let travel = 0.5 * (state.speed + speed) * dt;

    Ok(VehicleState {
        x: state.x + travel * heading.cos(),
        y: state.y + travel * heading.sin(),
        heading,
        speed,
        accel,
        tick: state.tick + 1,
    })
}

/// Reference path the lead vehicle drives.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Path {
    /// Along +x through the origin.
    #[default]
    Straight,
    /// Left-turning circle through the origin, tangent to +x there.
    Curve { radius: f64 },
}

impl Path {
    /// Pose at arc length `s` from the origin (negative `s` is behind it).
    pub fn pose_at(&self, s: f64) -> (f64, f64, f64) {
        match *self {
            Path::Straight => (s, 0.0, 0.0),
            Path::Curve { radius } => {
                let phi = s / radius;
                (radius * phi.sin(), radius * (1.0 - phi.cos()), normalize_angle(phi))
            }
        }
    }

    pub fn curvature(&self) -> f64 {
        match *self {
            Path::Straight => 0.0,
            Path::Curve { radius } => 1.0 / radius,
        }
    }

    /// Signed lateral offset (left positive) and heading error relative to
    /// the path at the closest point.
    pub fn tracking_error(&self, state: &VehicleState) -> (f64, f64) {
        match *self {
            Path::Straight => (state.y, normalize_angle(state.heading)),
            Path::Curve { radius } => {
                let (cx, cy) = (0.0, radius);
                let (dx, dy) = (state.x - cx, state.y - cy);
                let r = dx.hypot(dy);
                let tangent = dy.atan2(dx) + PI / 2.0;
                (radius - r, normalize_angle(state.heading - tangent))
            }
        }
    }
}

/// Speed profile of the lead vehicle: launch, cruise, then brake to rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadProfile {
    pub target_speed: f64,
    pub cruise_distance: f64,
    /// Negative.
    pub brake_decel: f64,
    pub launch_accel: f64,
    pub path: Path,
}

impl LeadProfile {
    pub fn new(target_speed: f64, cruise_distance: f64) -> Self {
        Self {
            target_speed,
            cruise_distance,
            brake_decel: -6.0,
            launch_accel: 2.0,
            path: Path::Straight,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_speed > 0.0 && self.cruise_distance > 0.0 && self.launch_accel > 0.0) {
            return Err(SimError::InvalidConfig(
                "lead target_speed, cruise_distance and launch_accel must be positive".into(),
            ));
        }
        if !(self.brake_decel < 0.0) {
            return Err(SimError::InvalidConfig("lead brake_decel must be negative".into()));
        }
        if let Path::Curve { radius } = self.path {
            if !(radius > 0.0) {
                return Err(SimError::InvalidConfig("curve radius must be positive".into()));
            }
        }
        Ok(())
    }
}

const LEAD_LATERAL_GAIN: f64 = 0.1;
const LEAD_HEADING_GAIN: f64 = 1.0;

pub fn lead_command(
    state: &VehicleState,
    odometer: f64,
    profile: &LeadProfile,
    limits: &ActuatorLimits,
) -> ControllerCommand {
    let accel = if odometer >= profile.cruise_distance {
        if state.speed > 0.0 {
            profile.brake_decel
        } else {
            0.0
        }
    } else if state.speed < profile.target_speed {
        profile
            .launch_accel
            .min((profile.target_speed - state.speed) / limits.dt)
    } else {
        0.0
    };

    let (lateral, heading_err) = profile.path.tracking_error(state);
    let feedforward = (limits.wheelbase * profile.path.curvature()).atan();
    let steer = feedforward - LEAD_LATERAL_GAIN * lateral - LEAD_HEADING_GAIN * heading_err;
    ControllerCommand::accel(accel, steer)
}
