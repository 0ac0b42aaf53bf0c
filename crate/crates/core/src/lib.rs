//! Car-following simulation: a lidar-based fallback longitudinal controller,
//! a V2V-dependent PID baseline, pure-pursuit lateral control and the
//! harness that runs emergency-braking scenarios with them.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dynamics;
pub mod error;
pub mod flc;
pub mod harness;
pub mod lateral;
pub mod lyapunov;
pub mod perception;
pub mod pid;
pub mod pipeline;

pub use config::SimConfig;
pub use error::{Result, SimError};
