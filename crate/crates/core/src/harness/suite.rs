use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::config::{ControllerChoice, SimConfig};
use crate::error::Result;

use super::{bumper_gap_of, run_scenario, write_selection_log, write_telemetry, RunOutput, RunSummary};

#[derive(Debug, Clone)]
pub struct SuiteRow {
    pub target_speed_kmh: f64,
    pub controller: ControllerChoice,
    pub outcome: std::result::Result<RunSummary, String>,
}

fn run_name(controller: ControllerChoice, kmh: f64) -> String {
    format!("{}_{}kmh", controller.as_str(), kmh)
}

/// Runs every (speed, controller) pair, writing per-run telemetry, a
/// summary table and per-speed plot tables (trajectories, gap over lead
/// distance, lead speed profile) into `out_dir`. A failing run is recorded
/// in the summary and the suite moves on.
pub fn run_suite(
    base: &SimConfig,
    speeds: &[f64],
    controllers: &[ControllerChoice],
    out_dir: &Path,
) -> Result<Vec<SuiteRow>> {
    std::fs::create_dir_all(out_dir)?;
    let mut rows = Vec::new();
    for &kmh in speeds {
        let mut outputs: Vec<(ControllerChoice, RunOutput)> = Vec::new();
        for &controller in controllers {
            let cfg = base.clone().with_speed(kmh).with_controller(controller);
            let outcome = run_scenario(&cfg).and_then(|out| {
                let name = run_name(controller, kmh);
                write_telemetry(&out.records, BufWriter::new(File::create(out_dir.join(format!("{name}.csv")))?))?;
                write_selection_log(
                    &out.logs,
                    BufWriter::new(File::create(out_dir.join(format!("{name}_selection.csv")))?),
                )?;
                Ok(out)
            });
            match outcome {
                Ok(out) => {
                    rows.push(SuiteRow {
                        target_speed_kmh: kmh,
                        controller,
                        outcome: Ok(out.summary.clone()),
                    });
                    outputs.push((controller, out));
                }
                Err(e) => rows.push(SuiteRow {
                    target_speed_kmh: kmh,
                    controller,
                    outcome: Err(e.to_string()),
                }),
            }
        }
        write_plot_tables(base, kmh, &outputs, out_dir)?;
    }
    write_summary(&rows, out_dir)?;
    Ok(rows)
}

fn write_plot_tables(base: &SimConfig, kmh: f64, outputs: &[(ControllerChoice, RunOutput)], out_dir: &Path) -> Result<()> {
    let length = base.sim.vehicle_length;
    let mut traj = csv::Writer::from_path(out_dir.join(format!("trajectory_{kmh}kmh.csv")))?;
    traj.write_record(["controller", "tick", "lead_x", "lead_y", "foll_x", "foll_y"])?;
    let mut gap = csv::Writer::from_path(out_dir.join(format!("gap_{kmh}kmh.csv")))?;
    gap.write_record(["controller", "lead_distance", "gap"])?;
    let mut speed = csv::Writer::from_path(out_dir.join(format!("lead_speed_{kmh}kmh.csv")))?;
    speed.write_record(["controller", "time_s", "lead_speed"])?;

    for (controller, out) in outputs {
        let name = controller.as_str();
        let mut travelled = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for r in &out.records {
            if let Some(p) = prev {
                travelled += (r.lead_x - p.0).hypot(r.lead_y - p.1);
            }
            prev = Some((r.lead_x, r.lead_y));
            traj.serialize((name, r.tick, r.lead_x, r.lead_y, r.foll_x, r.foll_y))?;
            gap.serialize((name, travelled, bumper_gap_of(r, length)))?;
            speed.serialize((name, r.time_s, r.lead_speed))?;
        }
    }
    traj.flush()?;
    gap.flush()?;
    speed.flush()?;
    Ok(())
}

fn write_summary(rows: &[SuiteRow], out_dir: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(out_dir.join("summary.csv"))?;
    w.write_record([
        "speed_kmh",
        "controller",
        "status",
        "collision",
        "min_clearance",
        "stop_clearance",
        "impact_speed",
        "avg_rotational_error_deg",
        "avg_translational_error_m",
        "ticks",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in rows {
        let speed = row.target_speed_kmh.to_string();
        let controller = row.controller.as_str();
        match &row.outcome {
            Ok(s) => {
                let status = if s.timed_out { "timeout" } else { "ok" };
                w.write_record([
                    speed.as_str(),
                    controller,
                    status,
                    &s.collision.to_string(),
                    &s.min_clearance.to_string(),
                    &opt(s.stop_clearance),
                    &opt(s.impact_speed),
                    &opt(s.avg_rotational_error_deg),
                    &opt(s.avg_translational_error_m),
                    &s.ticks.to_string(),
                ])?;
            }
            Err(e) => {
                let status = format!("error: {e}");
                w.write_record([speed.as_str(), controller, status.as_str(), "", "", "", "", "", "", ""])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
