use serde::{Deserialize, Serialize};

use super::grid::OccupancyGrid;

/// One 8-connected group of occupied cells with its bounding box in cell
/// indices (inclusive).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub cells: Vec<(usize, usize)>,
    pub min_ix: usize,
    pub max_ix: usize,
    pub min_iy: usize,
    pub max_iy: usize,
}

impl Cluster {
    fn seed(ix: usize, iy: usize) -> Self {
        Self {
            cells: Vec::new(),
            min_ix: ix,
            max_ix: ix,
            min_iy: iy,
            max_iy: iy,
        }
    }

    fn push(&mut self, ix: usize, iy: usize) {
        self.cells.push((ix, iy));
        self.min_ix = self.min_ix.min(ix);
        self.max_ix = self.max_ix.max(ix);
        self.min_iy = self.min_iy.min(iy);
        self.max_iy = self.max_iy.max(iy);
    }

    /// Metric size along x (length) and y (width).
    pub fn extent(&self, resolution: f64) -> (f64, f64) {
        (
            (self.max_ix - self.min_ix + 1) as f64 * resolution,
            (self.max_iy - self.min_iy + 1) as f64 * resolution,
        )
    }
}

/// Connected components under 8-connectivity, in raster order of each
/// component's first cell.
pub fn cluster(grid: &OccupancyGrid) -> Vec<Cluster> {
    let (w, h) = (grid.width, grid.height);
    let cells = grid.cells();
    let mut seen = vec![false; cells.len()];
    let mut stack = Vec::new();
    let mut out = Vec::new();

    for start in 0..cells.len() {
        if !cells[start] || seen[start] {
            continue;
        }
        let mut c = Cluster::seed(start % w, start / w);
        seen[start] = true;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (ix, iy) = (idx % w, idx / w);
            c.push(ix, iy);
            for ny in iy.saturating_sub(1)..=(iy + 1).min(h - 1) {
                for nx in ix.saturating_sub(1)..=(ix + 1).min(w - 1) {
                    let n = ny * w + nx;
                    if cells[n] && !seen[n] {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
        }
        out.push(c);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleConstraints {
    pub min_length: f64,
    pub max_length: f64,
    pub min_width: f64,
    pub max_width: f64,
}

impl Default for VehicleConstraints {
    fn default() -> Self {
        Self {
            min_length: 0.5,
            max_length: 6.0,
            min_width: 0.5,
            max_width: 3.0,
        }
    }
}

impl VehicleConstraints {
    pub fn admits(&self, length: f64, width: f64) -> bool {
        (self.min_length..=self.max_length).contains(&length)
            && (self.min_width..=self.max_width).contains(&width)
    }
}

/// Relative position of the lead vehicle's near edge in the follower frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectedVehicle {
    /// Forward, meters.
    pub delta_x: f64,
    /// Left, meters.
    pub delta_y: f64,
    /// (length, width) of the cluster's bounding box, meters.
    pub extent: (f64, f64),
}

impl DetectedVehicle {
    pub fn distance(&self) -> f64 {
        self.delta_x.hypot(self.delta_y)
    }

    /// Bearing of the target relative to the follower's heading.
    pub fn relative_angle(&self) -> f64 {
        self.delta_y.atan2(self.delta_x)
    }
}

/// Picks the nearest cluster whose bounding box fits `constraints` and
/// reports the midpoint of its near edge.
///
/// `inflation` is the dilation radius the clusters were grown by; the near
/// edge is taken from the first undilated column so dilation does not bias
/// the range short.
pub fn classify_and_localize(
    clusters: &[Cluster],
    grid: &OccupancyGrid,
    constraints: &VehicleConstraints,
    inflation: usize,
) -> Option<DetectedVehicle> {
    let res = grid.resolution();
    let (_, oy) = grid.origin();
    clusters
        .iter()
        .filter_map(|c| {
            let extent = c.extent(res);
            if !constraints.admits(extent.0, extent.1) {
                return None;
            }
            let near_ix = (c.min_ix + inflation).min(c.max_ix);
            let (delta_x, _) = grid.cell_center(near_ix, 0);
            let delta_y = oy + (c.min_iy + c.max_iy + 1) as f64 * 0.5 * res;
            let delta_x = delta_x.max(f64::MIN_POSITIVE);
            Some(DetectedVehicle {
                delta_x,
                delta_y,
                extent,
            })
        })
        .min_by(|a, b| a.distance().total_cmp(&b.distance()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_from(rows: &[&str]) -> OccupancyGrid {
        let h = rows.len();
        let w = rows[0].len();
        let mut g = OccupancyGrid::new(1.0, w, h, (0.0, 0.0));
        for (iy, row) in rows.iter().enumerate() {
            for (ix, ch) in row.chars().enumerate() {
                g.set(ix, iy, ch == '#');
            }
        }
        g
    }

    #[test]
    fn free_grid_has_no_clusters() {
        assert!(cluster(&grid_from(&["....", "...."])).is_empty());
    }

    #[test]
    fn separated_cells_form_two_clusters() {
        let g = grid_from(&["#..#", "...."]);
        assert_eq!(cluster(&g).len(), 2);
    }

    #[test]
    fn diagonal_neighbours_join() {
        let g = grid_from(&["#...", ".#..", "..#."]);
        let cs = cluster(&g);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].cells.len(), 3);
        assert_eq!((cs[0].min_ix, cs[0].max_ix, cs[0].min_iy, cs[0].max_iy), (0, 2, 0, 2));
    }

    #[test]
    fn every_cell_in_exactly_one_cluster() {
        let g = grid_from(&["##..#", "#...#", "..#..", "....#"]);
        let cs = cluster(&g);
        let total: usize = cs.iter().map(|c| c.cells.len()).sum();
        assert_eq!(total, g.occupied_count());
        let mut all: Vec<_> = cs.iter().flat_map(|c| c.cells.iter().copied()).collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), total);
    }

    #[test]
    fn no_clusters_no_detection() {
        let g = OccupancyGrid::new(0.2, 10, 10, (0.0, -1.0));
        assert!(classify_and_localize(&[], &g, &VehicleConstraints::default(), 0).is_none());
    }

    #[test]
    fn narrow_pole_rejected() {
        // 1 cell wide in y at 0.2 m resolution, 3 cells long
        let mut g = OccupancyGrid::new(0.2, 50, 50, (0.0, -5.0));
        for ix in 20..23 {
            g.set(ix, 25, true);
        }
        let cs = cluster(&g);
        assert_eq!(cs.len(), 1);
        assert!(classify_and_localize(&cs, &g, &VehicleConstraints::default(), 0).is_none());
    }

    #[test]
    fn nearest_vehicle_wins() {
        let mut g = OccupancyGrid::new(0.2, 100, 50, (0.0, -5.0));
        for (x0, y0) in [(60, 10), (30, 30)] {
            for ix in x0..x0 + 4 {
                for iy in y0..y0 + 10 {
                    g.set(ix, iy, true);
                }
            }
        }
        let cs = cluster(&g);
        let d = classify_and_localize(&cs, &g, &VehicleConstraints::default(), 0).unwrap();
        assert!((d.delta_x - 6.1).abs() < 1e-9);
        assert!((d.delta_y - 2.0).abs() < 1e-9);
        assert!((d.extent.0 - 0.8).abs() < 1e-9 && (d.extent.1 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn inflation_moves_edge_inward() {
        let mut g = OccupancyGrid::new(0.2, 100, 50, (0.0, -5.0));
        for ix in 30..34 {
            for iy in 20..30 {
                g.set(ix, iy, true);
            }
        }
        let cs = cluster(&g);
        let d0 = classify_and_localize(&cs, &g, &VehicleConstraints::default(), 0).unwrap();
        let d1 = classify_and_localize(&cs, &g, &VehicleConstraints::default(), 1).unwrap();
        assert!((d1.delta_x - d0.delta_x - 0.2).abs() < 1e-9);
    }
}
