use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::orbit::OrbitCloud;
use crate::{Error, Result};

/// Largest grid accepted by the coverage routines.
pub const MAX_CELLS: f64 = 1e8;

/// Uniform grid of step `resolution` on `[−half_width, half_width]` per real axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub half_width: f64,
    pub resolution: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { half_width: 2.0, resolution: 0.1 }
    }
}

impl Grid {
    pub fn new(half_width: f64, resolution: f64) -> Result<Self> {
        if !(half_width > 0.0 && resolution > 0.0 && half_width.is_finite() && resolution.is_finite()) {
            return Err(Error::InvalidArgument("grid half-width and resolution must be positive"));
        }
        Ok(Grid { half_width, resolution })
    }

    pub fn cells_per_axis(&self) -> usize {
        libm::ceil(2.0 * self.half_width / self.resolution - 1e-9).max(1.0) as usize
    }

    /// Cell index along one axis, or `None` outside the box.
    pub fn axis_cell(&self, x: f64) -> Option<usize> {
        if !(x >= -self.half_width && x <= self.half_width) {
            return None;
        }
        let per = self.cells_per_axis();
        let i = libm::floor((x + self.half_width) / self.resolution) as usize;
        Some(i.min(per - 1))
    }
}

/// Real coordinate `d` of a complex vector, with re/im interleaved.
pub fn real_coordinate(v: &[Complex64], d: usize) -> f64 {
    if d.is_multiple_of(2) {
        v[d / 2].re
    } else {
        v[d / 2].im
    }
}

/// Occupancy statistics of a grid over selected real coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityReport {
    /// Real coordinate indices spanned by the grid (re/im interleaved).
    pub dims: Vec<usize>,
    pub half_width: f64,
    pub resolution: f64,
    pub cells_per_axis: usize,
    pub cells_hit: u64,
    pub cells_total: u64,
    pub coverage: f64,
    /// Non-saturated points offered to the grid.
    pub points_used: u64,
    pub points_in_box: u64,
    pub saturated_points: u64,
}

/// Streaming cell-occupancy accumulator.
#[derive(Clone, Debug)]
pub struct CoverageGrid {
    grid: Grid,
    dims: Vec<usize>,
    per_axis: usize,
    bits: Vec<u64>,
    hit: u64,
    points_used: u64,
    points_in_box: u64,
    saturated: u64,
}

impl CoverageGrid {
    pub fn new(grid: Grid, dims: Vec<usize>) -> Result<Self> {
        let per_axis = grid.cells_per_axis();
        let cells = libm::pow(per_axis as f64, dims.len() as f64);
        if cells > MAX_CELLS {
            return Err(Error::GridTooLarge { cells });
        }
        let total = cells as usize;
        Ok(CoverageGrid {
            grid,
            dims,
            per_axis,
            bits: vec![0; total.div_ceil(64)],
            hit: 0,
            points_used: 0,
            points_in_box: 0,
            saturated: 0,
        })
    }

    pub fn cells_total(&self) -> u64 {
        (self.per_axis as u64).pow(self.dims.len() as u32)
    }

    pub fn insert(&mut self, point: &[Complex64], saturated: bool) {
        if saturated {
            self.saturated += 1;
            return;
        }
        self.points_used += 1;
        let mut index = 0usize;
        for &d in &self.dims {
            match self.grid.axis_cell(real_coordinate(point, d)) {
                Some(i) => index = index * self.per_axis + i,
                None => return,
            }
        }
        self.points_in_box += 1;
        let (word, bit) = (index / 64, index % 64);
        if self.bits[word] & (1 << bit) == 0 {
            self.bits[word] |= 1 << bit;
            self.hit += 1;
        }
    }

    /// Union with another accumulator over the same grid and dimensions.
    pub fn merge(&mut self, other: &CoverageGrid) {
        assert!(self.dims == other.dims && self.grid == other.grid, "grids differ");
        self.hit = 0;
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
            self.hit += a.count_ones() as u64;
        }
        self.points_used += other.points_used;
        self.points_in_box += other.points_in_box;
        self.saturated += other.saturated;
    }

    pub fn report(&self) -> DensityReport {
        let total = self.cells_total();
        DensityReport {
            dims: self.dims.clone(),
            half_width: self.grid.half_width,
            resolution: self.grid.resolution,
            cells_per_axis: self.per_axis,
            cells_hit: self.hit,
            cells_total: total,
            coverage: self.hit as f64 / total as f64,
            points_used: self.points_used,
            points_in_box: self.points_in_box,
            saturated_points: self.saturated,
        }
    }
}

/// Coverage of the full `2n`-dimensional grid.
pub fn box_coverage(cloud: &OrbitCloud, grid: &Grid) -> Result<DensityReport> {
    projection_coverage(cloud, grid, (0..2 * cloud.n).collect())
}

/// Coverage of the grid over the selected real coordinates.
pub fn projection_coverage(cloud: &OrbitCloud, grid: &Grid, dims: Vec<usize>) -> Result<DensityReport> {
    if dims.iter().any(|&d| d >= 2 * cloud.n) {
        return Err(Error::InvalidArgument("projection coordinate out of range"));
    }
    let mut acc = CoverageGrid::new(*grid, dims)?;
    for p in &cloud.points {
        acc.insert(&p.point, p.saturated);
    }
    Ok(acc.report())
}
