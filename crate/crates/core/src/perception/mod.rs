//! LiDAR lead-vehicle detector: scan -> occupancy grid -> dilation ->
//! clustering -> geometric classification -> relative position.
//!
//! Every occupied cell is treated as an edge candidate; there is no separate
//! edge-extraction step before dilation.

mod cluster;
mod grid;
mod lidar;

pub use cluster::{classify_and_localize, cluster, Cluster, DetectedVehicle, VehicleConstraints};
pub use grid::{dilate, rasterize, GridConfig, OccupancyGrid};
pub use lidar::{Footprint, LidarConfig, LidarScan, LidarSensor, ScanPoint};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub grid: GridConfig,
    pub dilation_radius: usize,
    pub constraints: VehicleConstraints,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            dilation_radius: 1,
            constraints: VehicleConstraints::default(),
        }
    }
}

/// Runs the full detection chain on one scan.
pub fn detect(scan: &LidarScan, cfg: &DetectorConfig) -> Option<DetectedVehicle> {
    if scan.points.is_empty() {
        return None;
    }
    let grid = rasterize(scan, &cfg.grid);
    let grid = dilate(&grid, cfg.dilation_radius);
    let clusters = cluster(&grid);
    classify_and_localize(&clusters, &grid, &cfg.constraints, cfg.dilation_radius)
}
