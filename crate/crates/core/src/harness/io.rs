use std::io::{Read, Write};

use crate::error::Result;
use crate::pipeline::StepLog;

use super::StepRecord;

pub const TELEMETRY_HEADER: &str =
    "tick,time_s,lead_x,lead_y,lead_speed,lead_accel,foll_x,foll_y,foll_speed,foll_accel,lf_dist,dist_s,delta_d,active,steer,command";

/// Writes telemetry rows under [`TELEMETRY_HEADER`]. Missing measurements
/// are left empty.
pub fn write_telemetry<W: Write>(records: &[StepRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TELEMETRY_HEADER.split(','))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_telemetry<R: Read>(input: R) -> Result<Vec<StepRecord>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

/// Controller selection trace: `tick,active_controller,selection_reason,lead_speed_read`.
pub fn write_selection_log<W: Write>(logs: &[StepLog], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tick", "active_controller", "selection_reason", "lead_speed_read"])?;
    for l in logs {
        let reason = match l.selection.reason {
            crate::pipeline::SelectionReason::FreshV2v => "fresh_v2v",
            crate::pipeline::SelectionReason::StaleV2v => "stale_v2v",
            crate::pipeline::SelectionReason::Outage => "outage",
            crate::pipeline::SelectionReason::Dropout => "dropout",
        };
        let speed = l.lead_speed_read.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([l.tick.to_string().as_str(), l.selection.active.as_str(), reason, speed.as_str()])?;
    }
    w.flush()?;
    Ok(())
}
