//! Gap-keeping PID baseline that relies on the lead's speed from V2V.
//!
//! Two gain sets are scheduled on the measured gap. The spacing setpoint is
//! `base_gap + desired_time_gap * S_F` and a relative-speed feedforward
//! `k_v * (S_L - S_F)` is added to the PID terms.

use serde::{Deserialize, Serialize};

use crate::dynamics::Longitudinal;
use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub k_p: f64,
    pub k_i: f64,
    pub k_d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidConfig {
    pub desired_time_gap: f64,
    pub base_gap: f64,
    pub gains_far: PidGains,
    pub gains_near: PidGains,
    pub k_v: f64,
    /// Gaps above this use `gains_far`.
    pub near_far_switch: f64,
    /// Bound on the integral term's contribution, m/s^2.
    pub integral_clamp: f64,
    pub max_accel: f64,
    pub max_decel: f64,
}

impl Default for PidConfig {
    fn default() -> Self {
        Self {
            desired_time_gap: 0.5,
            base_gap: 6.0,
            gains_far: PidGains {
                k_p: 0.45,
                k_i: 0.02,
                k_d: 0.10,
            },
            gains_near: PidGains {
                k_p: 0.80,
                k_i: 0.0,
                k_d: 0.25,
            },
            k_v: 0.6,
            near_far_switch: 15.0,
            integral_clamp: 1.0,
            max_accel: 3.5,
            max_decel: 8.0,
        }
    }
}

impl PidConfig {
    pub fn validate(&self) -> Result<()> {
        if self.desired_time_gap > 0.0
            && self.near_far_switch > 0.0
            && self.integral_clamp > 0.0
            && self.max_accel > 0.0
            && self.max_decel > 0.0
        {
            Ok(())
        } else {
            Err(SimError::InvalidConfig(format!("invalid pid config: {self:?}")))
        }
    }

    pub fn setpoint(&self, s_f: f64) -> f64 {
        self.base_gap + self.desired_time_gap * s_f
    }

    pub fn gains_for(&self, gap: f64) -> &PidGains {
        if gap > self.near_far_switch {
            &self.gains_far
        } else {
            &self.gains_near
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: Option<f64>,
}

impl PidState {
    /// Tracks the gap error without touching the integral, so the derivative
    /// term has a fresh reference when control is handed back.
    pub fn observe(&self, gap: f64, s_f: f64, cfg: &PidConfig) -> Self {
        Self {
            integral: self.integral,
            prev_error: Some(gap - cfg.setpoint(s_f)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidDecision {
    pub command: Longitudinal,
    pub error: f64,
    /// Measured time headway gap / S_F, `None` at standstill.
    pub time_headway: Option<f64>,
}

pub fn pid_step(
    s_l: f64,
    s_f: f64,
    gap: f64,
    dt: f64,
    state: PidState,
    cfg: &PidConfig,
) -> (PidDecision, PidState) {
    let error = gap - cfg.setpoint(s_f);
    let gains = cfg.gains_for(gap);

    let mut integral = state.integral + error * dt;
    if gains.k_i > 0.0 {
        let limit = cfg.integral_clamp / gains.k_i;
        integral = integral.clamp(-limit, limit);
    } else {
        // keep the stored integral bounded for whichever set uses it
        let limit = cfg.integral_clamp / cfg.gains_far.k_i.max(cfg.gains_near.k_i).max(f64::EPSILON);
        integral = integral.clamp(-limit, limit);
    }
    let derivative = state.prev_error.map_or(0.0, |prev| (error - prev) / dt);

    let accel = gains.k_p * error + gains.k_i * integral + gains.k_d * derivative + cfg.k_v * (s_l - s_f);
    let accel = accel.clamp(-cfg.max_decel, cfg.max_accel);

    let decision = PidDecision {
        command: Longitudinal::Accel(accel),
        error,
        time_headway: (s_f > 0.0).then(|| gap / s_f),
    };
    (
        decision,
        PidState {
            integral,
            prev_error: Some(error),
        },
    )
}
