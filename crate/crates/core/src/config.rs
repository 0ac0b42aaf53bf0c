//! TOML run configuration with sections `sim`, `flc`, `pid`, `v2v`,
//! `lidar`, `lateral` and `scenario`. Every key is optional.

use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ActuatorLimits, LeadProfile, Path};
use crate::error::Result;
use crate::flc::FlcConfig;
use crate::lateral::LateralConfig;
use crate::perception::{DetectorConfig, Footprint, GridConfig, LidarConfig, VehicleConstraints};
use crate::pid::PidConfig;
use crate::pipeline::{LongitudinalMode, PerceptionMode, PipelineConfig, V2vChannelConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub timeout_s: f64,
    pub max_accel: f64,
    pub max_decel: f64,
    pub max_steer: f64,
    pub wheelbase: f64,
    pub accel_lag: Option<f64>,
    pub vehicle_length: f64,
    pub vehicle_width: f64,
    pub miss_limit: u32,
    pub dropout_decel: f64,
    pub jerk_bound: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        let limits = ActuatorLimits::default();
        let footprint = Footprint::default();
        let pipeline = PipelineConfig::default();
        Self {
            dt: limits.dt,
            timeout_s: 180.0,
            max_accel: limits.max_accel,
            max_decel: limits.max_decel,
            max_steer: limits.max_steer,
            wheelbase: limits.wheelbase,
            accel_lag: limits.accel_lag,
            vehicle_length: footprint.length,
            vehicle_width: footprint.width,
            miss_limit: pipeline.miss_limit,
            dropout_decel: pipeline.dropout_decel,
            jerk_bound: pipeline.jerk_bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarSection {
    pub perception: PerceptionMode,
    pub max_range: f64,
    pub angular_step: f64,
    pub half_fov: f64,
    pub noise_sigma: f64,
    pub resolution: f64,
    pub forward: f64,
    pub lateral: f64,
    pub dilation_radius: usize,
    pub min_length: f64,
    pub max_length: f64,
    pub min_width: f64,
    pub max_width: f64,
}

impl Default for LidarSection {
    fn default() -> Self {
        let l = LidarConfig::default();
        let d = DetectorConfig::default();
        Self {
            perception: PerceptionMode::Lidar,
            max_range: l.max_range,
            angular_step: l.angular_step,
            half_fov: l.half_fov,
            noise_sigma: l.noise_sigma,
            resolution: d.grid.resolution,
            forward: d.grid.forward,
            lateral: d.grid.lateral,
            dilation_radius: d.dilation_radius,
            min_length: d.constraints.min_length,
            max_length: d.constraints.max_length,
            min_width: d.constraints.min_width,
            max_width: d.constraints.max_width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ControllerChoice {
    #[default]
    Flc,
    Pid,
    Pipeline,
}

impl ControllerChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerChoice::Flc => "flc",
            ControllerChoice::Pid => "pid",
            ControllerChoice::Pipeline => "pipeline",
        }
    }
}

impl std::str::FromStr for ControllerChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "flc" => Ok(ControllerChoice::Flc),
            "pid" => Ok(ControllerChoice::Pid),
            "pipeline" => Ok(ControllerChoice::Pipeline),
            other => Err(format!("unknown controller `{other}` (expected flc, pid or pipeline)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    /// km/h.
    pub target_speed: f64,
    /// Initial bumper-to-bumper distance, meters.
    pub initial_gap: f64,
    pub cruise_distance: f64,
    pub brake_decel: f64,
    pub launch_accel: f64,
    pub controller: ControllerChoice,
    pub path: Path,
    pub seed: u64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            target_speed: 70.0,
            initial_gap: 7.0,
            cruise_distance: 650.0,
            brake_decel: -6.0,
            launch_accel: 2.0,
            controller: ControllerChoice::Flc,
            path: Path::Straight,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub sim: SimSection,
    pub flc: FlcConfig,
    pub pid: PidConfig,
    pub v2v: V2vChannelConfig,
    pub lidar: LidarSection,
    pub lateral: LateralConfig,
    pub scenario: ScenarioSection,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.limits().validate()?;
        self.lead_profile().validate()?;
        self.flc.validate()?;
        self.pid.validate()?;
        self.v2v.validate()?;
        if !(self.scenario.initial_gap > 0.0) {
            return Err(crate::SimError::InvalidConfig("initial_gap must be positive".into()));
        }
        if !(self.lidar.resolution > 0.0 && self.lidar.angular_step > 0.0) {
            return Err(crate::SimError::InvalidConfig(
                "lidar resolution and angular_step must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn limits(&self) -> ActuatorLimits {
        ActuatorLimits {
            max_accel: self.sim.max_accel,
            max_decel: self.sim.max_decel,
            max_steer: self.sim.max_steer,
            dt: self.sim.dt,
            wheelbase: self.sim.wheelbase,
            accel_lag: self.sim.accel_lag,
        }
    }

    pub fn footprint(&self) -> Footprint {
        Footprint {
            length: self.sim.vehicle_length,
            width: self.sim.vehicle_width,
        }
    }

    pub fn lead_profile(&self) -> LeadProfile {
        LeadProfile {
            target_speed: self.scenario.target_speed / 3.6,
            cruise_distance: self.scenario.cruise_distance,
            brake_decel: self.scenario.brake_decel,
            launch_accel: self.scenario.launch_accel,
            path: self.scenario.path,
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        let l = &self.lidar;
        let mode = match self.scenario.controller {
            ControllerChoice::Flc => LongitudinalMode::FlcOnly,
            ControllerChoice::Pid => LongitudinalMode::PidOnly,
            ControllerChoice::Pipeline => LongitudinalMode::Switching,
        };
        PipelineConfig {
            mode,
            perception: l.perception,
            lidar: LidarConfig {
                max_range: l.max_range,
                angular_step: l.angular_step,
                half_fov: l.half_fov,
                noise_sigma: l.noise_sigma,
                seed: self.scenario.seed,
                lead_footprint: self.footprint(),
            },
            detector: DetectorConfig {
                grid: GridConfig {
                    resolution: l.resolution,
                    forward: l.forward,
                    lateral: l.lateral,
                },
                dilation_radius: l.dilation_radius,
                constraints: VehicleConstraints {
                    min_length: l.min_length,
                    max_length: l.max_length,
                    min_width: l.min_width,
                    max_width: l.max_width,
                },
            },
            lateral: LateralConfig {
                max_steer: self.lateral.max_steer.min(self.sim.max_steer),
                ..self.lateral
            },
            flc: self.flc,
            pid: PidConfig {
                max_accel: self.pid.max_accel.min(self.sim.max_accel),
                max_decel: self.pid.max_decel.min(self.sim.max_decel),
                ..self.pid
            },
            v2v: V2vChannelConfig {
                seed: self.scenario.seed,
                ..self.v2v.clone()
            },
            limits: self.limits(),
            miss_limit: self.sim.miss_limit,
            dropout_decel: self.sim.dropout_decel,
            jerk_bound: self.sim.jerk_bound,
        }
    }

    pub fn with_speed(mut self, kmh: f64) -> Self {
        self.scenario.target_speed = kmh;
        self
    }

    pub fn with_controller(mut self, controller: ControllerChoice) -> Self {
        self.scenario.controller = controller;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.scenario.seed = seed;
        self
    }
}
