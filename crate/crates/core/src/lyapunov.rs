//! Reduced closed-loop model of the fallback controller following a lead at
//! constant speed, with the quadratic Lyapunov candidate
//! `V = (x1^2 + x2^2) / 2`.
//!
//! State: `x1 = S_F - S_L` (speed excess), `x2 = dist_s` (gap surplus).
//! Only the normal (non-braking) branch of the controller enters the model.
//!
//! ```text
//! dx1/dt = g(x2)
//! dx2/dt = -x1 - T_G * g(x2) - 2 Z * g(x2) * (x1 + S_L)
//! g(x2)  = x2 * (1 - cos(pi * x2 / bound_t)),   Z = 0.1 / C
//! ```
//!
//! The `2Z` coefficient is kept as written even though differentiating the
//! saturating speed-scaled shift does not obviously produce it.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::flc::FlcConfig;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReducedState {
    pub x1: f64,
    pub x2: f64,
}

impl ReducedState {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn norm(&self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn in_stable_region(&self) -> bool {
        self.x1 > 0.0 && self.x2 > 0.0
    }

    fn axpy(&self, h: f64, d: (f64, f64)) -> Self {
        Self {
            x1: self.x1 + h * d.0,
            x2: self.x2 + h * d.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    pub bound_t: f64,
    pub t_g: f64,
    pub z: f64,
    pub s_l: f64,
}

impl ReducedParams {
    pub fn from_flc(cfg: &FlcConfig, s_l: f64) -> Self {
        Self {
            bound_t: cfg.bound_t,
            t_g: cfg.t_g,
            z: cfg.scale_coeff / cfg.c,
            s_l,
        }
    }
}

impl Default for ReducedParams {
    fn default() -> Self {
        Self::from_flc(&FlcConfig::default(), 13.9)
    }
}

fn shaped(x2: f64, bound_t: f64) -> f64 {
    x2 * (1.0 - (PI * x2 / bound_t).cos())
}

pub fn reduced_dynamics(x: &ReducedState, p: &ReducedParams) -> (f64, f64) {
    let g = shaped(x.x2, p.bound_t);
    let dx1 = g;
    let dx2 = -x.x1 - p.t_g * g - 2.0 * p.z * g * (x.x1 + p.s_l);
    (dx1, dx2)
}

pub fn lyapunov_value(x: &ReducedState) -> f64 {
    0.5 * (x.x1 * x.x1 + x.x2 * x.x2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovDerivative {
    /// Exact `dV/dt` along the reduced dynamics.
    pub exact: f64,
    /// Leading-order approximation `-x1 * x2`.
    pub dominant: f64,
}

pub fn lyapunov_derivative(x: &ReducedState, p: &ReducedParams) -> LyapunovDerivative {
    let (d1, d2) = reduced_dynamics(x, p);
    LyapunovDerivative {
        exact: x.x1 * d1 + x.x2 * d2,
        dominant: -x.x1 * x.x2,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<ReducedState>,
    /// First step index at which both coordinates are positive.
    pub entered_stable_region: Option<usize>,
}

impl Trajectory {
    pub fn final_state(&self) -> ReducedState {
        *self.states.last().expect("trajectory holds at least the initial state")
    }
}

pub fn rk4_step(x: &ReducedState, p: &ReducedParams, h: f64) -> ReducedState {
    let k1 = reduced_dynamics(x, p);
    let k2 = reduced_dynamics(&x.axpy(h / 2.0, k1), p);
    let k3 = reduced_dynamics(&x.axpy(h / 2.0, k2), p);
    let k4 = reduced_dynamics(&x.axpy(h, k3), p);
    ReducedState {
        x1: x.x1 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        x2: x.x2 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    }
}

/// Fixed-step RK4 integration for `steps` steps.
pub fn simulate_reduced(x0: ReducedState, p: &ReducedParams, dt: f64, steps: usize) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(SimError::InvalidConfig("dt must be positive".into()));
    }
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0);
    let mut entered = x0.in_stable_region().then_some(0);
    let mut x = x0;
    for step in 1..=steps {
        x = rk4_step(&x, p, dt);
        if !x.x1.is_finite() || !x.x2.is_finite() {
            return Err(SimError::NonFiniteState {
                step,
                x1: x.x1,
                x2: x.x2,
            });
        }
        if entered.is_none() && x.in_stable_region() {
            entered = Some(step);
        }
        states.push(x);
    }
    Ok(Trajectory {
        dt,
        states,
        entered_stable_region: entered,
    })
}

/// Inclusive linear sampling range `lo:hi:n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| {
            if self.n == 1 {
                self.lo
            } else {
                self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
            }
        })
    }
}

impl std::str::FromStr for Axis {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || SimError::InvalidConfig(format!("axis `{s}` is not lo:hi:n"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let [lo, hi, n] = parts.as_slice() else {
            return Err(bad());
        };
        let lo: f64 = lo.parse().map_err(|_| bad())?;
        let hi: f64 = hi.parse().map_err(|_| bad())?;
        let n: usize = n.parse().map_err(|_| bad())?;
        if n == 0 || !(lo <= hi) {
            return Err(bad());
        }
        Ok(Axis { lo, hi, n })
    }
}

/// Sampling grid for the diagnostic table, written as `x1axis,x2axis`,
/// e.g. `-1:1:21,-1:1:21`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x1: Axis,
    pub x2: Axis,
}

impl std::str::FromStr for GridSpec {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| SimError::InvalidConfig(format!("grid `{s}` is not x1axis,x2axis")))?;
        Ok(GridSpec {
            x1: a.parse()?,
            x2: b.parse()?,
        })
    }
}

/// Writes `x1,x2,V,dVdt,dominant_term` for every grid point.
pub fn write_grid_csv<W: Write>(grid: &GridSpec, p: &ReducedParams, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x1", "x2", "V", "dVdt", "dominant_term"])?;
    for x1 in grid.x1.values() {
        for x2 in grid.x2.values() {
            let x = ReducedState::new(x1, x2);
            let d = lyapunov_derivative(&x, p);
            w.serialize((x1, x2, lyapunov_value(&x), d.exact, d.dominant))?;
        }
    }
    w.flush()?;
    Ok(())
}
