//! Synthetic planar LiDAR: ray-casts a fan of beams against the lead
//! vehicle's rectangular footprint.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::VehicleState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub length: f64,
    pub width: f64,
}

impl Default for Footprint {
    fn default() -> Self {
        Self {
            length: 4.5,
            width: 1.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LidarConfig {
    pub max_range: f64,
    pub angular_step: f64,
    /// Half-angle of the forward field of view.
    pub half_fov: f64,
    /// Standard deviation of the additive range noise. Zero disables noise.
    pub noise_sigma: f64,
    pub seed: u64,
    pub lead_footprint: Footprint,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            max_range: 100.0,
            angular_step: 0.2_f64.to_radians(),
            half_fov: FRAC_PI_2,
            noise_sigma: 0.0,
            seed: 0,
            lead_footprint: Footprint::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub range: f64,
    /// Radians in the follower frame, left positive.
    pub bearing: f64,
}

impl ScanPoint {
    pub fn to_cartesian(&self) -> (f64, f64) {
        (self.range * self.bearing.cos(), self.range * self.bearing.sin())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LidarScan {
    pub points: Vec<ScanPoint>,
    pub max_range: f64,
    pub angular_step: f64,
}

impl LidarScan {
    pub fn empty(max_range: f64, angular_step: f64) -> Self {
        Self {
            points: Vec::new(),
            max_range,
            angular_step,
        }
    }

    /// Writes one `tick,range,bearing` line per point.
    pub fn dump_csv<W: Write>(&self, tick: u64, out: &mut W) -> std::io::Result<()> {
        for p in &self.points {
            writeln!(out, "{},{},{}", tick, p.range, p.bearing)?;
        }
        Ok(())
    }
}

/// A seeded sensor. Two sensors built from the same config produce
/// bit-identical scan sequences.
#[derive(Debug, Clone)]
pub struct LidarSensor {
    cfg: LidarConfig,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
}

impl LidarSensor {
    pub fn new(cfg: LidarConfig) -> Self {
        let noise = (cfg.noise_sigma > 0.0).then(|| Normal::new(0.0, cfg.noise_sigma).unwrap());
        Self {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            noise,
        }
    }

    pub fn config(&self) -> &LidarConfig {
        &self.cfg
    }

    pub fn synthesize_scan(&mut self, follower: &VehicleState, lead: &VehicleState) -> LidarScan {
        let cfg = &self.cfg;
        let mut scan = LidarScan::empty(cfg.max_range, cfg.angular_step);

        let (sin_l, cos_l) = lead.heading.sin_cos();
        // follower origin expressed in the lead's body frame
        let (dx, dy) = (follower.x - lead.x, follower.y - lead.y);
        let ox = cos_l * dx + sin_l * dy;
        let oy = -sin_l * dx + cos_l * dy;
        if ox.abs() <= cfg.lead_footprint.length / 2.0 && oy.abs() <= cfg.lead_footprint.width / 2.0 {
            return scan;
        }
        let half = (cfg.lead_footprint.length / 2.0, cfg.lead_footprint.width / 2.0);

        let n = (cfg.half_fov / cfg.angular_step).floor() as i64;
        for i in -n..=n {
            let bearing = i as f64 * cfg.angular_step;
            let world = follower.heading + bearing - lead.heading;
            let (dir_y, dir_x) = world.sin_cos();
            let Some(range) = ray_box(ox, oy, dir_x, dir_y, half) else {
                continue;
            };
            if range > cfg.max_range {
                continue;
            }
            let range = match &self.noise {
                Some(normal) => {
                    (range + normal.sample(&mut self.rng)).clamp(f64::MIN_POSITIVE, cfg.max_range)
                }
                None => range,
            };
            scan.points.push(ScanPoint { range, bearing });
        }
        scan
    }
}

/// Entry distance of a ray from outside an axis-aligned box centred at the
/// origin, or `None` on a miss.
fn ray_box(ox: f64, oy: f64, dx: f64, dy: f64, half: (f64, f64)) -> Option<f64> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for (o, d, h) in [(ox, dx, half.0), (oy, dy, half.1)] {
        if d.abs() < 1e-15 {
            if o.abs() > h {
                return None;
            }
            continue;
        }
        let t1 = (-h - o) / d;
        let t2 = (h - o) / d;
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        t_near = t_near.max(lo);
        t_far = t_far.min(hi);
    }
    (t_near <= t_far && t_near > 0.0).then_some(t_near)
}
