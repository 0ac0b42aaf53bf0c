//! Fallback longitudinal controller.
//!
//! Acceleration is a function of the measured gap and the follower's own
//! speed only. The desired gap grows with speed
//! (`D_d = T_G * S_F + B_gap`, plus a saturating speed-scaled shift), and
//! the remaining gap surplus `dist_s` is mapped through a truncated cosine:
//!
//! ```text
//! a = d * (1   - cos(pi * d / bound_t))   normal operation, d = clamp(dist_s)
//! a = d * (1.5 - cos(pi * d / bound_t))   gap closing fast, d = override_dist
//! ```
//!
//! The cosine is flat around zero, so the command eases from accelerating to
//! braking. Whenever the gap shrank by more than the brake threshold since
//! the previous sample, `d` is pinned to a fixed negative value to brake
//! immediately. Negative outputs are scaled by `brake_multiplier`.
//!
//! The only memory is the previous gap sample. No clock, timestamp or lead
//! speed is read.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::Longitudinal;
use crate::error::{Result, SimError};

/// Sample period the brake threshold is expressed in.
pub const REFERENCE_DT: f64 = 0.05;

/// How the instantaneous acceleration is folded into the speed setpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpeedIncorporation {
    /// `target = S_F + a * dt`
    #[default]
    PerStep,
    /// `target = S_F + a`
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlcConfig {
    pub t_g: f64,
    pub b_gap: f64,
    pub c: f64,
    pub bound_t: f64,
    pub scale_cap: f64,
    pub scale_coeff: f64,
    /// Gap change per reference sample at or below which the braking branch
    /// engages.
    pub delta_brake_threshold: f64,
    pub override_dist: f64,
    pub brake_multiplier: f64,
    pub speed_incorporation: SpeedIncorporation,
}

impl Default for FlcConfig {
    fn default() -> Self {
        Self {
            t_g: 1.0,
            b_gap: 6.0,
            c: 5.0 / 3.6,
            bound_t: 11.0,
            scale_cap: 0.4,
            scale_coeff: 0.1,
            delta_brake_threshold: -0.3,
            override_dist: -3.0,
            brake_multiplier: 1.8,
            speed_incorporation: SpeedIncorporation::PerStep,
        }
    }
}

impl FlcConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.t_g > 0.0
            && self.b_gap > 0.0
            && self.c > 0.0
            && self.bound_t > 0.0
            && self.scale_coeff > 0.0
            && self.scale_coeff <= self.scale_cap
            && self.delta_brake_threshold < 0.0
            && self.override_dist < 0.0
            && self.brake_multiplier >= 1.0;
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidConfig(format!("invalid flc config: {self:?}")))
        }
    }
}

/// Previous gap sample, `None` before the first valid measurement.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FlcState {
    pub prev_gap: Option<f64>,
}

pub fn desired_distance(s_f: f64, cfg: &FlcConfig) -> f64 {
    cfg.t_g * s_f + cfg.b_gap
}

pub fn scale_factor(s_f: f64, cfg: &FlcConfig) -> f64 {
    cfg.scale_cap.min(cfg.scale_coeff * s_f / cfg.c)
}

/// Gap surplus `dist_s` after subtracting the desired gap and the
/// speed-scaled shift.
pub fn distance_shift(lf_dist: f64, s_f: f64, cfg: &FlcConfig) -> f64 {
    let f_shift = s_f.max(0.0) * scale_factor(s_f, cfg);
    lf_dist - desired_distance(s_f, cfg) - f_shift
}

/// Truncated-cosine acceleration. `delta_d` is the gap change over one
/// reference sample period.
pub fn flc_accel(dist_s: f64, delta_d: f64, cfg: &FlcConfig) -> f64 {
    let a = if is_braking(delta_d, cfg) {
        let d = cfg.override_dist;
        d * (1.5 - (PI * d / cfg.bound_t).cos())
    } else {
        let d = dist_s.clamp(-cfg.bound_t, cfg.bound_t);
        d * (1.0 - (PI * d / cfg.bound_t).cos())
    };
    if a < 0.0 {
        a * cfg.brake_multiplier
    } else {
        a
    }
}

fn is_braking(delta_d: f64, cfg: &FlcConfig) -> bool {
    delta_d <= cfg.delta_brake_threshold
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlcDecision {
    pub command: Longitudinal,
    pub accel: f64,
    pub dist_s: f64,
    /// Raw gap change since the previous sample, meters.
    pub delta_d: f64,
    pub braking: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("perception dropout: no valid gap measurement")]
pub struct PerceptionDropout;

/// One controller invocation.
///
/// `dt` is the sample period of the caller. It rescales the gap change to
/// the reference period before the threshold test and sets how far the
/// speed setpoint moves; it never enters the acceleration law otherwise.
pub fn flc_step(
    lf_dist: f64,
    s_f: f64,
    state: FlcState,
    cfg: &FlcConfig,
    dt: f64,
) -> std::result::Result<(FlcDecision, FlcState), PerceptionDropout> {
    if !(lf_dist > 0.0) || !lf_dist.is_finite() {
        return Err(PerceptionDropout);
    }
    let delta_d = state.prev_gap.map_or(0.0, |prev| lf_dist - prev);
    let normalized = delta_d * (REFERENCE_DT / dt);
    let dist_s = distance_shift(lf_dist, s_f, cfg);
    let accel = flc_accel(dist_s, normalized, cfg);
    let step = match cfg.speed_incorporation {
        SpeedIncorporation::PerStep => accel * dt,
        SpeedIncorporation::Direct => accel,
    };
    let decision = FlcDecision {
        command: Longitudinal::Speed((s_f + step).max(0.0)),
        accel,
        dist_s,
        delta_d,
        braking: is_braking(normalized, cfg),
    };
    Ok((
        decision,
        FlcState {
            prev_gap: Some(lf_dist),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> FlcConfig {
        FlcConfig::default()
    }

    #[test]
    fn desired_distance_values() {
        assert_eq!(desired_distance(0.0, &cfg()), 6.0);
        assert_eq!(desired_distance(10.0, &cfg()), 16.0);
        let slope = desired_distance(7.0, &cfg()) - desired_distance(6.0, &cfg());
        assert!((slope - cfg().t_g).abs() < 1e-12);
    }

    #[test]
    fn scale_factor_values() {
        assert_eq!(scale_factor(0.0, &cfg()), 0.0);
        assert!((scale_factor(10.0 / 3.6, &cfg()) - 0.2).abs() < 1e-12);
        assert_eq!(scale_factor(20.0 / 3.6 + 1e-9, &cfg()), 0.4);
        assert_eq!(scale_factor(30.0, &cfg()), 0.4);
    }

    #[test]
    fn distance_shift_values() {
        assert_eq!(distance_shift(6.0, 0.0, &cfg()), 0.0);
        assert!((distance_shift(26.0, 10.0, &cfg()) - 6.0).abs() < 1e-12);
        let base = distance_shift(20.0, 8.0, &cfg());
        assert!((distance_shift(22.5, 8.0, &cfg()) - base - 2.5).abs() < 1e-12);
    }

    #[test]
    fn accel_branches() {
        assert_eq!(flc_accel(0.0, 0.0, &cfg()), 0.0);
        assert_eq!(flc_accel(11.0, 0.0, &cfg()), 22.0);
        let m = cfg().brake_multiplier;
        let lower = -3.0 * (1.5 - (3.0 * PI / 11.0).cos()) * m;
        for dist_s in [-20.0, 0.0, 4.0, 30.0] {
            assert_eq!(flc_accel(dist_s, -0.5, &cfg()), lower);
        }
        assert!((lower / m - -2.535).abs() < 1e-3);
    }

    #[test]
    fn threshold_is_inclusive() {
        assert!(flc_accel(5.0, -0.3, &cfg()) < 0.0);
        assert!(flc_accel(5.0, -0.29, &cfg()) > 0.0);
    }

    #[test]
    fn upper_branch_clamps_past_bound() {
        assert_eq!(flc_accel(40.0, 0.0, &cfg()), flc_accel(11.0, 0.0, &cfg()));
        assert_eq!(flc_accel(-40.0, 0.0, &cfg()), -22.0 * cfg().brake_multiplier);
    }

    #[test]
    fn standstill_at_desired_gap() {
        let (d, s) = flc_step(6.0, 0.0, FlcState::default(), &cfg(), 0.05).unwrap();
        assert_eq!(d.command, Longitudinal::Speed(0.0));
        assert_eq!(s.prev_gap, Some(6.0));
    }

    #[test]
    fn steady_surplus_speeds_up() {
        let state = FlcState { prev_gap: Some(26.0) };
        let (d, _) = flc_step(26.0, 10.0, state, &cfg(), 0.05).unwrap();
        assert!(d.command.value() > 10.0);
        assert!(!d.braking);
    }

    #[test]
    fn shrinking_gap_brakes() {
        let mut state = FlcState::default();
        let mut gap = 30.0;
        let mut last = None;
        for _ in 0..5 {
            let (d, s) = flc_step(gap, 15.0, state, &cfg(), 0.05).unwrap();
            state = s;
            gap -= 0.5;
            last = Some(d);
        }
        let d = last.unwrap();
        assert!(d.braking);
        assert!(d.command.value() < 15.0);
    }

    #[test]
    fn dropout_on_non_positive_gap() {
        assert_eq!(flc_step(0.0, 5.0, FlcState::default(), &cfg(), 0.05), Err(PerceptionDropout));
        assert_eq!(flc_step(-1.0, 5.0, FlcState::default(), &cfg(), 0.05), Err(PerceptionDropout));
        assert_eq!(flc_step(f64::NAN, 5.0, FlcState::default(), &cfg(), 0.05), Err(PerceptionDropout));
    }

    #[test]
    fn direct_incorporation_adds_full_accel() {
        let c = FlcConfig {
            speed_incorporation: SpeedIncorporation::Direct,
            ..cfg()
        };
        let (d, _) = flc_step(26.0, 10.0, FlcState { prev_gap: Some(26.0) }, &c, 0.05).unwrap();
        assert!((d.command.value() - (10.0 + d.accel)).abs() < 1e-12);
    }

    #[test]
    fn validate_rejects_bad_values() {
        assert!(cfg().validate().is_ok());
        assert!(FlcConfig { brake_multiplier: 0.5, ..cfg() }.validate().is_err());
        assert!(FlcConfig { scale_coeff: 0.5, ..cfg() }.validate().is_err());
        assert!(FlcConfig { override_dist: 1.0, ..cfg() }.validate().is_err());
    }
}
