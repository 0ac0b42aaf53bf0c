use std::f64::consts::PI;

use flcsim_core::config::ControllerChoice;
use flcsim_core::dynamics::Path;
use flcsim_core::flc::{distance_shift, flc_accel, flc_step, FlcConfig, FlcState};
use flcsim_core::harness::run_scenario;
use flcsim_core::lateral::{pure_pursuit_steer, LateralConfig};
use flcsim_core::perception::DetectedVehicle;
use flcsim_core::pid::{pid_step, PidConfig, PidState};
use flcsim_core::SimConfig;
use proptest::prelude::*;

/// Piecewise-linear gap profile with breakpoints every 0.1 s. Slopes in m/s;
/// -10 m/s closes faster than the braking threshold, -3 m/s does not.
fn gap_at(t: f64) -> f64 {
    const SLOPES: [f64; 8] = [0.0, 2.0, -3.0, -10.0, -10.0, 1.0, -4.0, 0.5];
    let seg = (t / 0.1).floor() as usize;
    let mut gap = 30.0;
    for k in 0..seg {
        gap += SLOPES[k % SLOPES.len()] * 0.1;
    }
    gap + SLOPES[seg % SLOPES.len()] * (t - seg as f64 * 0.1)
}

fn speed_at(t: f64) -> f64 {
    12.0 + 0.5 * t
}

/// Acceleration and branch decisions at each multiple of 0.1 s when the same
/// physical signals are sampled at `fps`.
fn decisions(fps: u32, secs: u32) -> Vec<(f64, bool)> {
    let cfg = FlcConfig::default();
    let dt = 1.0 / fps as f64;
    let per = fps / 10;
    let mut state = FlcState::default();
    let mut out = Vec::new();
    for i in 0..=(secs * fps) {
        let t = i as f64 / fps as f64;
        let (d, next) = flc_step(gap_at(t), speed_at(t), state, &cfg, dt).unwrap();
        state = next;
        if i > 0 && i % per == 0 {
            out.push((d.accel, d.braking));
        }
    }
    out
}

#[test]
fn flc_decisions_independent_of_tick_rate() {
    let a = decisions(10, 6);
    let b = decisions(20, 6);
    let c = decisions(40, 6);
    assert_eq!(a.len(), 60);
    assert!(a.iter().any(|d| d.1) && a.iter().any(|d| !d.1));
    for ((x, y), z) in a.iter().zip(&b).zip(&c) {
        assert_eq!(x.1, y.1);
        assert_eq!(x.1, z.1);
        assert!((x.0 - y.0).abs() <= 1e-9 * x.0.abs().max(1.0));
        assert!((x.0 - z.0).abs() <= 1e-9 * x.0.abs().max(1.0));
    }
}

#[test]
fn flc_replay_is_bit_exact() {
    let cfg = FlcConfig::default();
    let run = || {
        let mut state = FlcState::default();
        (0..200)
            .map(|i| {
                let t = i as f64 * 0.05;
                let (d, next) = flc_step(gap_at(t), speed_at(t), state, &cfg, 0.05).unwrap();
                state = next;
                d.command.value().to_bits()
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn flc_plateau_at_origin() {
    let cfg = FlcConfig::default();
    let h = 1e-4;
    let slope = (flc_accel(h, 0.0, &cfg) - flc_accel(-h, 0.0, &cfg)) / (2.0 * h);
    assert!(slope.abs() < 1e-6, "slope {slope}");
}

#[test]
fn pid_converges_at_50_kmh() {
    let cfg = PidConfig::default();
    let dt = 0.05;
    let s_l = 50.0 / 3.6;
    let (mut lead_x, mut foll_x, mut s_f) = (40.0, 0.0, 10.0);
    let mut state = PidState::default();
    let mut gap = 0.0;
    for _ in 0..(30.0 / dt) as usize {
        gap = lead_x - 2.25 - foll_x;
        let (d, next) = pid_step(s_l, s_f, gap, dt, state, &cfg);
        state = next;
        let a = d.command.as_accel(s_f, dt);
        let new_speed = (s_f + a * dt).max(0.0);
        foll_x += 0.5 * (s_f + new_speed) * dt;
        s_f = new_speed;
        lead_x += s_l * dt;
    }
    assert!((gap - cfg.setpoint(s_f)).abs() < 0.5, "gap {gap}, setpoint {}", cfg.setpoint(s_f));
}

#[test]
fn circle_tracking_at_30_kmh() {
    let radius = 100.0;
    let mut cfg = SimConfig::default()
        .with_speed(30.0)
        .with_controller(ControllerChoice::Flc);
    cfg.scenario.path = Path::Curve { radius };
    let out = run_scenario(&cfg).unwrap();
    assert!(!out.summary.collision);
    let worst = out
        .records
        .iter()
        .filter(|r| r.time_s > 10.0 && r.foll_speed > 0.1)
        .map(|r| (r.foll_x.hypot(r.foll_y - radius) - radius).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.5, "lateral deviation {worst}");
    // Averaged against the lead's traced path, the error cannot exceed the
    // worst deviation from the circle by more than the lead's own wander.
    let translational = out.summary.avg_translational_error_m.unwrap();
    assert!(translational < worst + 0.1, "translational error {translational}");
    assert!(out.summary.avg_rotational_error_deg.unwrap() < 1.0);
}

proptest! {
    #[test]
    fn upper_branch_sign_follows_dist_s(dist_s in -10.99f64..10.99) {
        let a = flc_accel(dist_s, 0.0, &FlcConfig::default());
        prop_assert_eq!(a.signum() == dist_s.signum() || dist_s == 0.0, true);
        prop_assert_eq!(a == 0.0, dist_s == 0.0);
    }

    #[test]
    fn lower_branch_always_brakes(dist_s in -100.0f64..100.0, delta in -20.0f64..-0.3) {
        prop_assert!(flc_accel(dist_s, delta, &FlcConfig::default()) < 0.0);
    }

    #[test]
    fn shift_is_additive_in_gap(lf in 0.5f64..80.0, s_f in 0.0f64..40.0, d in 0.0f64..10.0) {
        let cfg = FlcConfig::default();
        let diff = distance_shift(lf + d, s_f, &cfg) - distance_shift(lf, s_f, &cfg);
        prop_assert!((diff - d).abs() < 1e-9);
    }

    #[test]
    fn flc_command_is_finite_and_nonnegative(lf in 0.01f64..200.0, prev in 0.01f64..200.0, s_f in 0.0f64..50.0) {
        let state = FlcState { prev_gap: Some(prev) };
        let (d, next) = flc_step(lf, s_f, state, &FlcConfig::default(), 0.05).unwrap();
        prop_assert!(d.command.value().is_finite() && d.command.value() >= 0.0);
        prop_assert_eq!(next.prev_gap, Some(lf));
    }

    #[test]
    fn pid_integral_stays_bounded(errors in proptest::collection::vec(-500.0f64..500.0, 1..300)) {
        let cfg = PidConfig::default();
        let mut state = PidState::default();
        for e in errors {
            let gap = cfg.setpoint(10.0) + e;
            state = pid_step(10.0, 10.0, gap, 0.05, state, &cfg).1;
            prop_assert!(state.integral.abs() * cfg.gains_far.k_i <= cfg.integral_clamp + 1e-9);
        }
    }

    #[test]
    fn pursuit_is_odd_and_time_free(dx in 0.1f64..60.0, dy in -10.0f64..10.0, la in 1.0f64..30.0) {
        let cfg = LateralConfig::default();
        let t = |y| DetectedVehicle { delta_x: dx, delta_y: y, extent: (4.5, 1.9) };
        let a = pure_pursuit_steer(&t(dy), la, &cfg);
        prop_assert_eq!(a, -pure_pursuit_steer(&t(-dy), la, &cfg));
        prop_assert_eq!(a, pure_pursuit_steer(&t(dy), la, &cfg));
        prop_assert!(a.abs() <= cfg.max_steer);
        prop_assert!(pure_pursuit_steer(&t(dy), la * 1.5, &cfg).abs() <= a.abs());
    }
}

#[test]
fn braking_branch_value() {
    let cfg = FlcConfig::default();
    let expected = -3.0 * (1.5 - (3.0 * PI / 11.0).cos()) * cfg.brake_multiplier;
    let got = flc_accel(2.0, -0.5, &cfg);
    assert!(((got - expected) / expected).abs() < 1e-9);
}
