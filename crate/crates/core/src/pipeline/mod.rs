//! Per-tick follower loop: perception, V2V availability check, controller
//! selection and command merging.
//!
//! The PID baseline drives while a fresh lead-speed message is held; the
//! fallback controller takes over as soon as that message goes stale. The
//! fallback's gap memory is updated on every tick regardless of which
//! controller is active, so it never starts from an old sample.

mod v2v;

pub use v2v::{V2vChannel, V2vChannelConfig, V2vMessage};

use serde::{Deserialize, Serialize};

use crate::dynamics::{ActuatorLimits, ControllerCommand, Longitudinal, VehicleState};
use crate::flc::{flc_step, FlcConfig, FlcState};
use crate::lateral::{lookahead_distance, pure_pursuit_steer, wheel_angle, LateralConfig};
use crate::perception::{detect, DetectedVehicle, DetectorConfig, LidarConfig, LidarSensor};
use crate::pid::{pid_step, PidConfig, PidState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControllerKind {
    #[serde(rename = "PID")]
    Pid,
    #[serde(rename = "FLC")]
    Flc,
}

impl ControllerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerKind::Pid => "PID",
            ControllerKind::Flc => "FLC",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionReason {
    FreshV2v,
    /// Nothing usable has ever arrived, or messages arrive too late.
    StaleV2v,
    /// Inside a configured outage window.
    Outage,
    /// Messages were arriving but stopped.
    Dropout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControllerSelection {
    pub active: ControllerKind,
    pub reason: SelectionReason,
}

/// Chooses the longitudinal controller from the send tick of the newest
/// held V2V message.
pub fn select_controller(last_sent_tick: Option<u64>, now: u64, cfg: &V2vChannelConfig) -> ControllerSelection {
    let fresh = last_sent_tick.is_some_and(|sent| now.saturating_sub(sent) <= cfg.freshness_threshold);
    let (active, reason) = if fresh {
        (ControllerKind::Pid, SelectionReason::FreshV2v)
    } else if cfg.in_outage(now) {
        (ControllerKind::Flc, SelectionReason::Outage)
    } else if last_sent_tick.is_none() || cfg.delay_ticks > cfg.freshness_threshold {
        (ControllerKind::Flc, SelectionReason::StaleV2v)
    } else {
        (ControllerKind::Flc, SelectionReason::Dropout)
    };
    ControllerSelection { active, reason }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LongitudinalMode {
    /// Switch on V2V freshness.
    #[default]
    Switching,
    /// Fallback controller only; the V2V link is ignored.
    FlcOnly,
    /// PID only, with the lead speed read directly (ideal link).
    PidOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PerceptionMode {
    #[default]
    Lidar,
    /// Exact lead position from the simulator, skipping the detector.
    GroundTruth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub mode: LongitudinalMode,
    pub perception: PerceptionMode,
    pub lidar: LidarConfig,
    pub detector: DetectorConfig,
    pub lateral: LateralConfig,
    pub flc: FlcConfig,
    pub pid: PidConfig,
    pub v2v: V2vChannelConfig,
    pub limits: ActuatorLimits,
    /// Consecutive perception misses before gentle braking starts.
    pub miss_limit: u32,
    /// Deceleration magnitude applied after `miss_limit` misses.
    pub dropout_decel: f64,
    /// Rate limit on the commanded acceleration right after a controller
    /// switch, m/s^3.
    pub jerk_bound: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: LongitudinalMode::Switching,
            perception: PerceptionMode::Lidar,
            lidar: LidarConfig::default(),
            detector: DetectorConfig::default(),
            lateral: LateralConfig::default(),
            flc: FlcConfig::default(),
            pid: PidConfig::default(),
            v2v: V2vChannelConfig::default(),
            limits: ActuatorLimits::default(),
            miss_limit: 5,
            dropout_decel: 1.0,
            jerk_bound: 10.0,
        }
    }
}

/// Ground truth the follower's sensors observe on one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct World {
    pub lead: VehicleState,
    pub follower: VehicleState,
    pub tick: u64,
}

#[derive(Debug, Clone)]
pub struct PipelineState {
    pub flc: FlcState,
    pub pid: PidState,
    channel: V2vChannel,
    sensor: LidarSensor,
    held: Option<V2vMessage>,
    last_command: Option<ControllerCommand>,
    last_accel: Option<f64>,
    last_active: Option<ControllerKind>,
    misses: u32,
    blending: bool,
}

impl PipelineState {
    pub fn new(cfg: &PipelineConfig) -> Self {
        Self {
            flc: FlcState::default(),
            pid: PidState::default(),
            channel: V2vChannel::new(cfg.v2v.clone()),
            sensor: LidarSensor::new(cfg.lidar),
            held: None,
            last_command: None,
            last_accel: None,
            last_active: None,
            misses: 0,
            blending: false,
        }
    }

    pub fn held_message(&self) -> Option<&V2vMessage> {
        self.held.as_ref()
    }
}

/// Everything the loop observed and decided on one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLog {
    pub tick: u64,
    pub detection: Option<DetectedVehicle>,
    pub lf_dist: Option<f64>,
    pub dist_s: Option<f64>,
    pub delta_d: Option<f64>,
    pub flc_accel: Option<f64>,
    pub flc_braking: bool,
    pub selection: ControllerSelection,
    /// Lead speed consumed by the controller this tick, if any.
    pub lead_speed_read: Option<f64>,
    pub relative_angle: Option<f64>,
    pub steer: f64,
    pub command: ControllerCommand,
    /// Command expressed as an acceleration, clamped to the actuator limits.
    pub command_accel: f64,
    pub perception_misses: u32,
    pub blending: bool,
}

/// Exact relative position of the lead's rear-edge midpoint.
pub fn ground_truth_detection(follower: &VehicleState, lead: &VehicleState, lead_length: f64, lead_width: f64) -> Option<DetectedVehicle> {
    let half = lead_length / 2.0;
    let rx = lead.x - half * lead.heading.cos() - follower.x;
    let ry = lead.y - half * lead.heading.sin() - follower.y;
    let (s, c) = follower.heading.sin_cos();
    let delta_x = c * rx + s * ry;
    let delta_y = -s * rx + c * ry;
    (delta_x > 0.0).then_some(DetectedVehicle {
        delta_x,
        delta_y,
        extent: (lead_length, lead_width),
    })
}

pub fn follower_step(world: &World, state: &mut PipelineState, cfg: &PipelineConfig) -> StepLog {
    let follower = &world.follower;
    let dt = cfg.limits.dt;
    let s_f = follower.speed;

    let detection = match cfg.perception {
        PerceptionMode::Lidar => {
            let scan = state.sensor.synthesize_scan(follower, &world.lead);
            detect(&scan, &cfg.detector)
        }
        PerceptionMode::GroundTruth => ground_truth_detection(
            follower,
            &world.lead,
            cfg.lidar.lead_footprint.length,
            cfg.lidar.lead_footprint.width,
        ),
    };

    // V2V: the lead broadcasts its speed every tick.
    let outgoing = V2vMessage {
        lead_speed: world.lead.speed,
        seq: world.tick,
        sent_tick: world.tick,
    };
    if let Some(m) = state.channel.channel_step(Some(outgoing), world.tick) {
        state.held = Some(m);
    }
    let selection = match cfg.mode {
        LongitudinalMode::Switching => select_controller(state.held.map(|m| m.sent_tick), world.tick, &cfg.v2v),
        LongitudinalMode::FlcOnly => ControllerSelection {
            active: ControllerKind::Flc,
            reason: SelectionReason::Outage,
        },
        LongitudinalMode::PidOnly => ControllerSelection {
            active: ControllerKind::Pid,
            reason: SelectionReason::FreshV2v,
        },
    };

    let mut log = StepLog {
        tick: world.tick,
        detection,
        lf_dist: None,
        dist_s: None,
        delta_d: None,
        flc_accel: None,
        flc_braking: false,
        selection,
        lead_speed_read: None,
        relative_angle: None,
        steer: 0.0,
        command: ControllerCommand::accel(0.0, 0.0),
        command_accel: 0.0,
        perception_misses: 0,
        blending: false,
    };

    let Some(target) = detection else {
        state.misses += 1;
        state.flc.prev_gap = None;
        state.pid.prev_error = None;
        let held = state.last_command.unwrap_or(ControllerCommand::accel(0.0, 0.0));
        let command = if state.misses > cfg.miss_limit {
            ControllerCommand::accel(-cfg.dropout_decel, held.steer)
        } else {
            held
        };
        let accel = command_accel(&command, s_f, &cfg.limits);
        log.steer = command.steer;
        log.command = command;
        log.command_accel = accel;
        log.perception_misses = state.misses;
        state.last_accel = Some(accel);
        state.last_active = Some(selection.active);
        return log;
    };
    state.misses = 0;

    let lf_dist = target.distance();
    let lookahead = lookahead_distance(s_f, &cfg.lateral);
    let theta = pure_pursuit_steer(&target, lookahead, &cfg.lateral);
    let steer = wheel_angle(theta, &cfg.lateral);

    let flc = flc_step(lf_dist, s_f, state.flc, &cfg.flc, dt);
    if let Ok((decision, next)) = flc {
        state.flc = next;
        log.dist_s = Some(decision.dist_s);
        log.delta_d = Some(decision.delta_d);
        log.flc_accel = Some(decision.accel);
        log.flc_braking = decision.braking;
    }

    let longitudinal = match selection.active {
        ControllerKind::Pid => {
            let lead_speed = match cfg.mode {
                LongitudinalMode::PidOnly => world.lead.speed,
                _ => state.held.map_or(world.lead.speed, |m| m.lead_speed),
            };
            log.lead_speed_read = Some(lead_speed);
            let (decision, next) = pid_step(lead_speed, s_f, lf_dist, dt, state.pid, &cfg.pid);
            state.pid = next;
            decision.command
        }
        ControllerKind::Flc => {
            state.pid = state.pid.observe(lf_dist, s_f, &cfg.pid);
            match flc {
                Ok((decision, _)) => decision.command,
                Err(_) => state
                    .last_command
                    .map_or(Longitudinal::Accel(0.0), |c| c.longitudinal),
            }
        }
    };

    let switched = state.last_active.is_some_and(|prev| prev != selection.active);
    if switched {
        state.blending = true;
    }
    let mut command = ControllerCommand {
        longitudinal,
        steer,
    };
    let mut accel = command_accel(&command, s_f, &cfg.limits);
    if state.blending {
        if log.flc_braking && selection.active == ControllerKind::Flc {
            state.blending = false;
        } else if let Some(prev) = state.last_accel {
            let max_step = cfg.jerk_bound * dt;
            if (accel - prev).abs() <= max_step {
                state.blending = false;
            } else {
                accel = prev + (accel - prev).clamp(-max_step, max_step);
                command.longitudinal = Longitudinal::Accel(accel);
                log.blending = true;
            }
        }
    }

    log.lf_dist = Some(lf_dist);
    log.relative_angle = Some(target.relative_angle());
    log.steer = steer;
    log.command = command;
    log.command_accel = accel;

    state.last_command = Some(command);
    state.last_accel = Some(accel);
    state.last_active = Some(selection.active);
    log
}

fn command_accel(command: &ControllerCommand, speed: f64, limits: &ActuatorLimits) -> f64 {
    command
        .longitudinal
        .as_accel(speed, limits.dt)
        .clamp(-limits.max_decel, limits.max_accel)
}
