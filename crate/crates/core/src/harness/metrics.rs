use crate::dynamics::{normalize_angle, VehicleState};

use super::StepRecord;

/// Signed bumper-to-bumper distance: centre distance minus both
/// half-lengths, negative once the follower's centre passes the lead's
/// along the follower's heading.
pub fn bumper_gap(lead: &VehicleState, follower: &VehicleState, lead_length: f64, follower_length: f64) -> f64 {
    let (dx, dy) = (lead.x - follower.x, lead.y - follower.y);
    let along = dx * follower.heading.cos() + dy * follower.heading.sin();
    let centre = dx.hypot(dy).copysign(along);
    centre - 0.5 * (lead_length + follower_length)
}

/// Unsigned bumper gap from a telemetry row, for plotting.
pub(crate) fn bumper_gap_of(r: &StepRecord, length: f64) -> f64 {
    (r.lead_x - r.foll_x).hypot(r.lead_y - r.foll_y) - length
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingErrors {
    /// Mean absolute heading difference to the lead path tangent, degrees.
    pub rotational_deg: f64,
    /// Mean perpendicular distance to the lead's traced path, meters.
    pub translational_m: f64,
}

/// Follower tracking error against the polyline the lead actually drove.
///
/// Only ticks where the follower moved and lies alongside the lead's path
/// (not before its start or past its end) contribute. Follower heading is
/// taken from its displacement between consecutive rows.
pub fn tracking_errors(records: &[StepRecord]) -> Option<TrackingErrors> {
    let mut path: Vec<(f64, f64)> = Vec::new();
    for r in records {
        let p = (r.lead_x, r.lead_y);
        if path.last().is_none_or(|q| (q.0 - p.0).hypot(q.1 - p.1) > 1e-9) {
            path.push(p);
        }
    }
    if path.len() < 2 {
        return None;
    }

    let mut rot_sum = 0.0;
    let mut trans_sum = 0.0;
    let mut n = 0usize;
    let mut hint = 0usize;
    for pair in records.windows(2) {
        let (dx, dy) = (pair[1].foll_x - pair[0].foll_x, pair[1].foll_y - pair[0].foll_y);
        if dx.hypot(dy) < 1e-9 {
            continue;
        }
        let heading = dy.atan2(dx);
        let p = (pair[1].foll_x, pair[1].foll_y);
        let Some((dist, tangent, seg)) = nearest_projection(&path, p, hint) else {
            continue;
        };
        hint = seg;
        rot_sum += normalize_angle(heading - tangent).abs().to_degrees();
        trans_sum += dist;
        n += 1;
    }
    (n > 0).then(|| TrackingErrors {
        rotational_deg: rot_sum / n as f64,
        translational_m: trans_sum / n as f64,
    })
}

/// Nearest point of the polyline `path` to `p`, returning (distance,
/// segment heading, segment index). `None` when that point lies before the
/// start or past the end of the path. The search starts at `hint` and
/// covers the whole path so loops are handled.
fn nearest_projection(path: &[(f64, f64)], p: (f64, f64), hint: usize) -> Option<(f64, f64, usize)> {
    let n = path.len() - 1;
    let mut best: Option<(f64, f64, usize, f64)> = None;
    for k in 0..n {
        let i = (hint + k) % n;
        let (a, b) = (path[i], path[i + 1]);
        let (vx, vy) = (b.0 - a.0, b.1 - a.1);
        let len2 = vx * vx + vy * vy;
        let t = ((p.0 - a.0) * vx + (p.1 - a.1) * vy) / len2;
        let (cx, cy) = (a.0 + t.clamp(0.0, 1.0) * vx, a.1 + t.clamp(0.0, 1.0) * vy);
        let d = (p.0 - cx).hypot(p.1 - cy);
        if best.is_none_or(|b| d < b.0) {
            best = Some((d, vy.atan2(vx), i, t));
        }
    }
    let (d, heading, i, t) = best?;
    let beyond_ends = (i == 0 && t < 0.0) || (i == n - 1 && t > 1.0);
    (!beyond_ends).then_some((d, heading, i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::ControllerKind;

    fn row(tick: u64, lead: (f64, f64), foll: (f64, f64)) -> StepRecord {
        StepRecord {
            tick,
            time_s: tick as f64 * 0.05,
            lead_x: lead.0,
            lead_y: lead.1,
            lead_speed: 0.0,
            lead_accel: 0.0,
            foll_x: foll.0,
            foll_y: foll.1,
            foll_speed: 0.0,
            foll_accel: 0.0,
            lf_dist: None,
            dist_s: None,
            delta_d: None,
            active: ControllerKind::Flc,
            steer: 0.0,
            command: 0.0,
        }
    }

    #[test]
    fn on_path_is_zero() {
        let recs: Vec<_> = (0..50)
            .map(|i| row(i, (i as f64 + 10.0, 0.0), (i as f64, 0.0)))
            .collect();
        let e = tracking_errors(&recs).unwrap();
        assert_eq!(e.rotational_deg, 0.0);
        assert_eq!(e.translational_m, 0.0);
    }

    #[test]
    fn constant_offset() {
        let recs: Vec<_> = (0..50)
            .map(|i| row(i, (i as f64 + 10.0, 0.0), (i as f64, 0.5)))
            .collect();
        let e = tracking_errors(&recs).unwrap();
        assert!(e.rotational_deg.abs() < 1e-12);
        assert!((e.translational_m - 0.5).abs() < 1e-12);
    }

    #[test]
    fn outer_corner_uses_nearest_vertex() {
        // Square loop: a point just outside a corner projects onto neither
        // adjacent segment but is still close to the path.
        let path = [(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0), (0.0, 0.5)];
        let (d, _, _) = nearest_projection(&path, (10.1, -0.1), 0).unwrap();
        assert!((d - 0.1f64.hypot(0.1)).abs() < 1e-12);
        assert!(nearest_projection(&path, (-1.0, 0.0), 0).is_none());
    }

    #[test]
    fn degenerate_path() {
        let recs: Vec<_> = (0..5).map(|i| row(i, (3.0, 0.0), (i as f64, 0.0))).collect();
        assert!(tracking_errors(&recs).is_none());
        assert!(tracking_errors(&[]).is_none());
    }

    #[test]
    fn bumper_gap_straight() {
        let lead = VehicleState::at_rest(20.0, 0.0, 0.0);
        let foll = VehicleState::at_rest(0.0, 0.0, 0.0);
        assert!((bumper_gap(&lead, &foll, 4.5, 4.5) - 15.5).abs() < 1e-12);
        assert!(bumper_gap(&foll, &lead, 4.5, 4.5) < 0.0);
    }
}
