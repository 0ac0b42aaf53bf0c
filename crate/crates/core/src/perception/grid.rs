use serde::{Deserialize, Serialize};

use super::lidar::LidarScan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    /// Meters per cell.
    pub resolution: f64,
    /// Forward extent in meters, starting at the sensor.
    pub forward: f64,
    /// Total lateral extent in meters, centred on the sensor axis.
    pub lateral: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            resolution: 0.2,
            forward: 60.0,
            lateral: 20.0,
        }
    }
}

impl GridConfig {
    pub fn empty_grid(&self) -> OccupancyGrid {
        let width = (self.forward / self.resolution).round() as usize;
        let height = (self.lateral / self.resolution).round() as usize;
        OccupancyGrid::new(self.resolution, width, height, (0.0, -self.lateral / 2.0))
    }
}

/// Binary grid over the area in front of the follower. Column index runs
/// forward (x), row index runs left (y).
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    resolution: f64,
    pub width: usize,
    pub height: usize,
    origin: (f64, f64),
    cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(resolution: f64, width: usize, height: usize, origin: (f64, f64)) -> Self {
        assert!(resolution > 0.0, "grid resolution must be positive");
        Self {
            resolution,
            width,
            height,
            origin,
            cells: vec![false; width * height],
        }
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Follower-frame coordinates of the lower corner of cell (0, 0).
    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn get(&self, ix: usize, iy: usize) -> bool {
        self.cells[iy * self.width + ix]
    }

    pub fn set(&mut self, ix: usize, iy: usize, value: bool) {
        self.cells[iy * self.width + ix] = value;
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Cell containing a follower-frame point, if inside the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let (ox, oy) = self.origin();
        let res = self.resolution();
        let fx = ((x - ox) / res).floor();
        let fy = ((y - oy) / res).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        let (ox, oy) = self.origin();
        let res = self.resolution();
        (ox + (ix as f64 + 0.5) * res, oy + (iy as f64 + 0.5) * res)
    }

    fn like(&self) -> Self {
        Self {
            cells: vec![false; self.cells.len()],
            ..*self
        }
    }
}

pub fn rasterize(scan: &LidarScan, grid_cfg: &GridConfig) -> OccupancyGrid {
    let mut grid = grid_cfg.empty_grid();
    for p in &scan.points {
        let (x, y) = p.to_cartesian();
        if let Some((ix, iy)) = grid.cell_of(x, y) {
            grid.set(ix, iy, true);
        }
    }
    grid
}

/// Binary dilation with a square (Chebyshev) kernel of the given radius.
/// Runs as two separable sliding-window passes, so the cost does not depend
/// on the radius.
pub fn dilate(grid: &OccupancyGrid, kernel_radius: usize) -> OccupancyGrid {
    if kernel_radius == 0 || grid.cells.is_empty() {
        return grid.clone();
    }
    let (w, h) = (grid.width, grid.height);
    let mut rows = grid.like();
    for iy in 0..h {
        let src = &grid.cells[iy * w..(iy + 1) * w];
        let dst = &mut rows.cells[iy * w..(iy + 1) * w];
        sliding_any(src.iter().copied(), w, kernel_radius, |i, v| dst[i] = v);
    }
    let mut out = grid.like();
    for ix in 0..w {
        let column = (0..h).map(|iy| rows.cells[iy * w + ix]);
        let cells = &mut out.cells;
        sliding_any(column, h, kernel_radius, |i, v| cells[i * w + ix] = v);
    }
    out
}

/// For each position i in a line of length `n`, reports whether any value in
/// [i - r, i + r] is set.
fn sliding_any(line: impl Iterator<Item = bool>, n: usize, r: usize, mut emit: impl FnMut(usize, bool)) {
    let values: Vec<bool> = line.collect();
    let mut count = 0usize;
    // window initially covers [0, r - 1]
    for &v in values.iter().take(r) {
        count += v as usize;
    }
    for i in 0..n {
        if i + r < n {
            count += values[i + r] as usize;
        }
        if i > r {
            count -= values[i - r - 1] as usize;
        }
        emit(i, count > 0);
    }
}
