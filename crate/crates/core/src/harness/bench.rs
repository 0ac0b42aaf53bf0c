use crate::config::SimConfig;
use crate::error::{Result, SimError};

use super::Simulation;

/// Follower-step latency percentiles in microseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyStats {
    pub samples: usize,
    pub p50_us: f64,
    pub p99_us: f64,
    pub mean_us: f64,
    pub max_us: f64,
}

/// Times `ticks` follower steps (perception, controller selection and
/// control), restarting the scenario whenever it ends.
pub fn measure_step_latency(cfg: &SimConfig, ticks: usize) -> Result<LatencyStats> {
    if ticks == 0 {
        return Err(SimError::InvalidConfig("bench needs at least one tick".into()));
    }
    let mut sim = Simulation::new(cfg)?;
    let mut samples = Vec::with_capacity(ticks);
    while samples.len() < ticks {
        let out = sim.advance()?;
        samples.push(out.follower_step_time.as_secs_f64() * 1e6);
        if out.termination.is_some() {
            sim = Simulation::new(cfg)?;
        }
    }
    samples.sort_by(f64::total_cmp);
    let pct = |p: f64| samples[((samples.len() - 1) as f64 * p).round() as usize];
    Ok(LatencyStats {
        samples: samples.len(),
        p50_us: pct(0.5),
        p99_us: pct(0.99),
        mean_us: samples.iter().sum::<f64>() / samples.len() as f64,
        max_us: samples[samples.len() - 1],
    })
}
