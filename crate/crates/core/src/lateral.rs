//! Pure-pursuit style steering toward the detected lead vehicle.
//!
//! The steering law is `theta = 2 * dy / (lookahead^2 + dx^2)` with a
//! speed-dependent lookahead. It has no time input: the same relative target
//! and lookahead always give the same angle.

use serde::{Deserialize, Serialize};

use crate::perception::DetectedVehicle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LateralConfig {
    pub base_lookahead: f64,
    /// Seconds of lookahead added per m/s of follower speed.
    pub speed_scale: f64,
    pub max_steer: f64,
    /// Scale from the steering law's output to road-wheel angle, like a
    /// normalized steering input mapped onto the vehicle's steering range.
    pub steer_gain: f64,
}

impl Default for LateralConfig {
    fn default() -> Self {
        Self {
            base_lookahead: 4.0,
            speed_scale: 0.5,
            max_steer: std::f64::consts::FRAC_PI_6,
            steer_gain: 3.0,
        }
    }
}

pub fn lookahead_distance(speed: f64, cfg: &LateralConfig) -> f64 {
    cfg.base_lookahead + speed.max(0.0) * cfg.speed_scale
}

/// Steering output of the pursuit law, clamped to `max_steer`.
pub fn pure_pursuit_steer(target: &DetectedVehicle, lookahead: f64, cfg: &LateralConfig) -> f64 {
    let theta = 2.0 * target.delta_y / (lookahead * lookahead + target.delta_x * target.delta_x);
    theta.clamp(-cfg.max_steer, cfg.max_steer)
}

/// Road-wheel angle handed to the plant.
pub fn wheel_angle(theta: f64, cfg: &LateralConfig) -> f64 {
    (cfg.steer_gain * theta).clamp(-cfg.max_steer, cfg.max_steer)
}
