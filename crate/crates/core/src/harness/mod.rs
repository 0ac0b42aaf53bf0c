//! Emergency-braking scenario: the lead launches from rest, cruises for a
//! fixed distance and then brakes hard to a stop while the follower tries to
//! keep its distance.

mod bench;
mod io;
mod metrics;
mod suite;

pub use bench::{measure_step_latency, LatencyStats};
pub use io::{read_telemetry, write_selection_log, write_telemetry, TELEMETRY_HEADER};
pub use metrics::{bumper_gap, tracking_errors, TrackingErrors};
use metrics::bumper_gap_of;
pub use suite::{run_suite, SuiteRow};

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::config::{ControllerChoice, SimConfig};
use crate::dynamics::{lead_command, step_vehicle, ActuatorLimits, LeadProfile, VehicleState};
use crate::error::Result;
use crate::perception::Footprint;
use crate::pipeline::{follower_step, ControllerKind, PipelineConfig, PipelineState, StepLog, World};

/// Speed below which a vehicle counts as stopped, m/s.
const STOP_SPEED: f64 = 1e-3;
/// Consecutive stopped ticks that end a run.
const SETTLE_TICKS: u32 = 20;

/// One telemetry row. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub tick: u64,
    pub time_s: f64,
    pub lead_x: f64,
    pub lead_y: f64,
    pub lead_speed: f64,
    pub lead_accel: f64,
    pub foll_x: f64,
    pub foll_y: f64,
    pub foll_speed: f64,
    pub foll_accel: f64,
    /// Measured gap from the follower's sensor to the lead's near edge.
    pub lf_dist: Option<f64>,
    pub dist_s: Option<f64>,
    pub delta_d: Option<f64>,
    pub active: ControllerKind,
    pub steer: f64,
    /// Longitudinal command as an acceleration, m/s^2.
    pub command: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub controller: ControllerChoice,
    pub target_speed_kmh: f64,
    pub collision: bool,
    pub timed_out: bool,
    /// Smallest bumper-to-bumper distance over the run.
    pub min_clearance: f64,
    /// Bumper-to-bumper distance once both vehicles are at rest.
    pub stop_clearance: Option<f64>,
    /// Closing speed at the moment of contact.
    pub impact_speed: Option<f64>,
    pub avg_rotational_error_deg: Option<f64>,
    pub avg_translational_error_m: Option<f64>,
    pub ticks: u64,
    pub wallclock_per_tick_us: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<StepRecord>,
    pub logs: Vec<StepLog>,
    pub summary: RunSummary,
}

/// Why a simulation stopped advancing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Collision,
    Settled,
    Timeout,
}

/// Stepwise simulation of one scenario.
pub struct Simulation {
    pub lead: VehicleState,
    pub follower: VehicleState,
    pub tick: u64,
    pub odometer: f64,
    profile: LeadProfile,
    limits: ActuatorLimits,
    footprint: Footprint,
    pipeline_cfg: PipelineConfig,
    pipeline: PipelineState,
    timeout_ticks: u64,
    settled_for: u32,
}

/// One advanced tick: the row describing the state before the step, the
/// pipeline log and whether the run is over.
pub struct TickOutcome {
    pub record: StepRecord,
    pub log: StepLog,
    pub follower_step_time: Duration,
    pub termination: Option<Termination>,
}

impl Simulation {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let profile = cfg.lead_profile();
        let footprint = cfg.footprint();
        let (lx, ly, lh) = profile.path.pose_at(0.0);
        let (fx, fy, fh) = profile.path.pose_at(-(cfg.scenario.initial_gap + footprint.length));
        let pipeline_cfg = cfg.pipeline();
        Ok(Self {
            lead: VehicleState::at_rest(lx, ly, lh),
            follower: VehicleState::at_rest(fx, fy, fh),
            tick: 0,
            odometer: 0.0,
            profile,
            limits: cfg.limits(),
            footprint,
            pipeline: PipelineState::new(&pipeline_cfg),
            pipeline_cfg,
            timeout_ticks: (cfg.sim.timeout_s / cfg.sim.dt).ceil() as u64,
            settled_for: 0,
        })
    }

    pub fn bumper_gap(&self) -> f64 {
        bumper_gap(&self.lead, &self.follower, self.footprint.length, self.footprint.length)
    }

    pub fn advance(&mut self) -> Result<TickOutcome> {
        let world = World {
            lead: self.lead,
            follower: self.follower,
            tick: self.tick,
        };
        let started = Instant::now();
        let log = follower_step(&world, &mut self.pipeline, &self.pipeline_cfg);
        let follower_step_time = started.elapsed();
        let lead_cmd = lead_command(&self.lead, self.odometer, &self.profile, &self.limits);

        let record = StepRecord {
            tick: self.tick,
            time_s: self.tick as f64 * self.limits.dt,
            lead_x: self.lead.x,
            lead_y: self.lead.y,
            lead_speed: self.lead.speed,
            lead_accel: self.lead.accel,
            foll_x: self.follower.x,
            foll_y: self.follower.y,
            foll_speed: self.follower.speed,
            foll_accel: self.follower.accel,
            lf_dist: log.lf_dist,
            dist_s: log.dist_s,
            delta_d: log.delta_d,
            active: log.selection.active,
            steer: log.steer,
            command: log.command_accel,
        };

        let lead_done = self.odometer >= self.profile.cruise_distance && self.lead.speed == 0.0;
        if lead_done && self.follower.speed < STOP_SPEED {
            self.settled_for += 1;
        } else {
            self.settled_for = 0;
        }
        let termination = if self.bumper_gap() <= 0.0 {
            Some(Termination::Collision)
        } else if self.settled_for >= SETTLE_TICKS {
            Some(Termination::Settled)
        } else if self.tick >= self.timeout_ticks {
            Some(Termination::Timeout)
        } else {
            None
        };

        if termination.is_none() {
            let lead = step_vehicle(&self.lead, &lead_cmd, &self.limits)?;
            self.odometer += 0.5 * (self.lead.speed + lead.speed) * self.limits.dt;
            self.lead = lead;
            self.follower = step_vehicle(&self.follower, &log.command, &self.limits)?;
            self.tick += 1;
        }
        Ok(TickOutcome {
            record,
            log,
            follower_step_time,
            termination,
        })
    }
}

/// Runs one scenario to completion.
pub fn run_scenario(cfg: &SimConfig) -> Result<RunOutput> {
    let mut sim = Simulation::new(cfg)?;
    let mut records = Vec::new();
    let mut logs = Vec::new();
    let mut min_clearance = f64::INFINITY;
    let mut step_time = Duration::ZERO;

    let termination = loop {
        min_clearance = min_clearance.min(sim.bumper_gap());
        let out = sim.advance()?;
        step_time += out.follower_step_time;
        records.push(out.record);
        logs.push(out.log);
        if let Some(t) = out.termination {
            break t;
        }
    };

    let collision = termination == Termination::Collision;
    let last = records.last().expect("at least one tick recorded");
    let stop_clearance = (termination == Termination::Settled).then(|| sim.bumper_gap());
    let impact_speed = collision.then_some(last.foll_speed - last.lead_speed);
    let tracking = if collision { None } else { tracking_errors(&records) };

    let summary = RunSummary {
        controller: cfg.scenario.controller,
        target_speed_kmh: cfg.scenario.target_speed,
        collision,
        timed_out: termination == Termination::Timeout,
        min_clearance,
        stop_clearance,
        impact_speed,
        avg_rotational_error_deg: tracking.map(|t| t.rotational_deg),
        avg_translational_error_m: tracking.map(|t| t.translational_m),
        ticks: records.len() as u64,
        wallclock_per_tick_us: step_time.as_secs_f64() * 1e6 / records.len() as f64,
    };
    Ok(RunOutput {
        records,
        logs,
        summary,
    })
}
