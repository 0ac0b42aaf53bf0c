use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use flcsim_core::config::ControllerChoice;
use flcsim_core::harness::{measure_step_latency, run_scenario, run_suite, write_selection_log, write_telemetry};
use flcsim_core::lyapunov::{write_grid_csv, GridSpec, ReducedParams};
use flcsim_core::SimConfig;

#[derive(Parser)]
#[command(name = "flcsim", version, about = "Car-following emergency braking simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its telemetry.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Lead target speed, km/h.
        #[arg(long)]
        speed: Option<f64>,
        #[arg(long)]
        controller: Option<ControllerChoice>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run 30/50/70/90 km/h with FLC and PID.
    Suite {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate V and dV/dt of the reduced dynamics, e.g. `--grid -1:1:21,-1:1:21`.
    Lyapunov {
        #[arg(long, allow_hyphen_values = true)]
        grid: GridSpec,
        #[arg(long)]
        out: PathBuf,
        /// Lead speed used by the reduced model, m/s.
        #[arg(long)]
        lead_speed: Option<f64>,
    },
    /// Measure follower-step latency.
    Bench {
        #[arg(long, default_value_t = 1000)]
        ticks: usize,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<SimConfig> {
    SimConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            speed,
            controller,
            out,
            seed,
        } => {
            let mut cfg = load(&config)?;
            if let Some(s) = speed {
                cfg = cfg.with_speed(s);
            }
            if let Some(c) = controller {
                cfg = cfg.with_controller(c);
            }
            if let Some(s) = seed {
                cfg = cfg.with_seed(s);
            }
            let run = run_scenario(&cfg)?;
            std::fs::create_dir_all(&out)?;
            let name = format!("{}_{}kmh", cfg.scenario.controller.as_str(), cfg.scenario.target_speed);
            write_telemetry(&run.records, BufWriter::new(File::create(out.join(format!("{name}.csv")))?))?;
            write_selection_log(&run.logs, BufWriter::new(File::create(out.join(format!("{name}_selection.csv")))?))?;
            let s = &run.summary;
            println!(
                "{name}: collision={} min_clearance={:.3} stop_clearance={} ticks={}",
                s.collision,
                s.min_clearance,
                s.stop_clearance.map_or("-".into(), |c| format!("{c:.3}")),
                s.ticks
            );
            if let (Some(rot), Some(trans)) = (s.avg_rotational_error_deg, s.avg_translational_error_m) {
                println!("tracking: rotational={rot:.4} deg translational={trans:.4} m");
            }
        }
        Command::Suite { config, out } => {
            let cfg = load(&config)?;
            let rows = run_suite(
                &cfg,
                &[30.0, 50.0, 70.0, 90.0],
                &[ControllerChoice::Flc, ControllerChoice::Pid],
                &out,
            )?;
            for row in rows {
                match row.outcome {
                    Ok(s) => println!(
                        "{} {} km/h: collision={} min_clearance={:.3}",
                        row.controller.as_str(),
                        row.target_speed_kmh,
                        s.collision,
                        s.min_clearance
                    ),
                    Err(e) => println!("{} {} km/h: error: {e}", row.controller.as_str(), row.target_speed_kmh),
                }
            }
        }
        Command::Lyapunov { grid, out, lead_speed } => {
            let flc = SimConfig::default().flc;
            let params = match lead_speed {
                Some(s) => ReducedParams::from_flc(&flc, s),
                None => ReducedParams::default(),
            };
            write_grid_csv(&grid, &params, BufWriter::new(File::create(&out)?))?;
        }
        Command::Bench { ticks, config } => {
            let cfg = match config {
                Some(p) => load(&p)?,
                None => SimConfig::default(),
            };
            let stats = measure_step_latency(&cfg, ticks)?;
            println!(
                "samples={} p50={:.1}us p99={:.1}us mean={:.1}us max={:.1}us",
                stats.samples, stats.p50_us, stats.p99_us, stats.mean_us, stats.max_us
            );
        }
    }
    Ok(())
}
