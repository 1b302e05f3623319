//! Occupancy grids, coordinates and square-window sensing.
//!
//! Coordinates are 1-based: `x` is the column and `y` the row, both in
//! `[1, N]`. Storage is row-major with `y` as the row.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellCoord {
    pub x: usize,
    pub y: usize,
}

impl CellCoord {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// Row-major ordering key, `(y, x)`.
    pub fn row_major_key(&self) -> (usize, usize) {
        (self.y, self.x)
    }

    pub fn euclidean(&self, other: &CellCoord) -> f64 {
        let dx = self.x as f64 - other.x as f64;
        let dy = self.y as f64 - other.y as f64;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn squared_distance(&self, other: &CellCoord) -> f64 {
        let dx = self.x as f64 - other.x as f64;
        let dy = self.y as f64 - other.y as f64;
        dx * dx + dy * dy
    }
}

impl fmt::Display for CellCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Occupancy value range and the two thresholds shared by every agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancyParams {
    pub phi_min: i32,
    pub phi_max: i32,
    /// Cells with occupancy above this are untraversable for seekers.
    pub phi_obs: i32,
    /// Occupancy assumed for unexplored cells.
    pub phi_u: i32,
}

impl Default for OccupancyParams {
    fn default() -> Self {
        Self { phi_min: 0, phi_max: 100, phi_obs: 50, phi_u: 50 }
    }
}

impl OccupancyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi_min <= self.phi_u && self.phi_u <= self.phi_obs && self.phi_obs <= self.phi_max) {
            return Err(Error::InvalidParameter(format!(
                "occupancy parameters must satisfy phi_min <= phi_u <= phi_obs <= phi_max, got {} {} {} {}",
                self.phi_min, self.phi_u, self.phi_obs, self.phi_max
            )));
        }
        Ok(())
    }

    pub fn in_range(&self, value: i32) -> bool {
        self.phi_min <= value && value <= self.phi_max
    }
}

/// An N×N occupancy grid. Used both for the true world (fully explored) and
/// for an agent's belief (unexplored cells hold `phi_u`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyGrid {
    size: usize,
    params: OccupancyParams,
    occupancy: Vec<i32>,
    explored: Vec<bool>,
}

impl OccupancyGrid {
    /// A fully known world grid.
    pub fn from_values(size: usize, params: OccupancyParams, occupancy: Vec<i32>) -> Result<Self> {
        params.validate()?;
        if size == 0 {
            return Err(Error::InvalidParameter("grid size must be positive".into()));
        }
        if occupancy.len() != size * size {
            return Err(Error::InvalidParameter(format!(
                "expected {} occupancy values, got {}",
                size * size,
                occupancy.len()
            )));
        }
        if let Some(v) = occupancy.iter().find(|v| !params.in_range(**v)) {
            return Err(Error::InvalidParameter(format!(
                "occupancy {v} outside [{}, {}]",
                params.phi_min, params.phi_max
            )));
        }
        Ok(Self { size, params, occupancy, explored: vec![true; size * size] })
    }

    /// An empty belief: every cell unexplored and priced at `phi_u`.
    pub fn unknown(size: usize, params: OccupancyParams) -> Result<Self> {
        params.validate()?;
        if size == 0 {
            return Err(Error::InvalidParameter("grid size must be positive".into()));
        }
        Ok(Self {
            size,
            params,
            occupancy: vec![params.phi_u; size * size],
            explored: vec![false; size * size],
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn params(&self) -> &OccupancyParams {
        &self.params
    }

    pub fn contains(&self, c: CellCoord) -> bool {
        (1..=self.size).contains(&c.x) && (1..=self.size).contains(&c.y)
    }

    pub fn check(&self, c: CellCoord) -> Result<()> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(Error::InvalidCoordinate { coord: c, size: self.size })
        }
    }

    /// Row-major index of an in-bounds coordinate.
    pub fn index(&self, c: CellCoord) -> usize {
        debug_assert!(self.contains(c), "{c} out of bounds");
        (c.y - 1) * self.size + (c.x - 1)
    }

    pub fn coord(&self, index: usize) -> CellCoord {
        CellCoord::new(index % self.size + 1, index / self.size + 1)
    }

    pub fn get(&self, c: CellCoord) -> i32 {
        self.occupancy[self.index(c)]
    }

    pub fn is_explored(&self, c: CellCoord) -> bool {
        self.explored[self.index(c)]
    }

    pub fn is_traversable(&self, c: CellCoord) -> bool {
        self.get(c) <= self.params.phi_obs
    }

    /// Write an observed value and mark the cell explored.
    pub fn observe(&mut self, c: CellCoord, value: i32) {
        let i = self.index(c);
        self.occupancy[i] = value;
        self.explored[i] = true;
    }

    /// Overwrite a value without touching the explored mask.
    pub fn set(&mut self, c: CellCoord, value: i32) {
        let i = self.index(c);
        self.occupancy[i] = value;
    }

    pub fn values(&self) -> &[i32] {
        &self.occupancy
    }

    pub fn explored_mask(&self) -> &[bool] {
        &self.explored
    }

    pub fn explored_count(&self) -> usize {
        self.explored.iter().filter(|e| **e).count()
    }

    /// All coordinates in row-major order.
    pub fn coords(&self) -> impl Iterator<Item = CellCoord> + '_ {
        (0..self.size * self.size).map(|i| self.coord(i))
    }

    /// In-bounds 4-neighbours, in a fixed order.
    pub fn neighbors4(&self, c: CellCoord) -> impl Iterator<Item = CellCoord> + '_ {
        const OFFSETS: [(isize, isize); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
        OFFSETS.iter().filter_map(move |(dx, dy)| self.offset(c, *dx, *dy))
    }

    pub fn offset(&self, c: CellCoord, dx: isize, dy: isize) -> Option<CellCoord> {
        let x = c.x as isize + dx;
        let y = c.y as isize + dy;
        if x < 1 || y < 1 || x > self.size as isize || y > self.size as isize {
            None
        } else {
            Some(CellCoord::new(x as usize, y as usize))
        }
    }
}

/// Side length of the square sensing window, odd and smaller than the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorSpec {
    window: usize,
}

impl SensorSpec {
    pub fn new(window: usize, grid_size: usize) -> Result<Self> {
        if window == 0 || window.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("sensing window must be odd and positive, got {window}")));
        }
        if window >= grid_size {
            return Err(Error::InvalidParameter(format!(
                "sensing window {window} must be smaller than the grid size {grid_size}"
            )));
        }
        Ok(Self { window })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn radius(&self) -> usize {
        self.window / 2
    }
}

/// Cells of the window centred on `center`, clipped to the grid, row-major.
pub fn window_cells(size: usize, center: CellCoord, spec: SensorSpec) -> Vec<CellCoord> {
    let r = spec.radius();
    let x0 = center.x.saturating_sub(r).max(1);
    let x1 = (center.x + r).min(size);
    let y0 = center.y.saturating_sub(r).max(1);
    let y1 = (center.y + r).min(size);
    let mut out = Vec::with_capacity((x1 + 1 - x0) * (y1 + 1 - y0));
    for y in y0..=y1 {
        for x in x0..=x1 {
            out.push(CellCoord::new(x, y));
        }
    }
    out
}

/// Observe the clipped window around `center`, copying the true occupancy into
/// `belief`. Returns every cell of the window, including already-known ones.
pub fn sense(
    world: &OccupancyGrid,
    belief: &mut OccupancyGrid,
    center: CellCoord,
    spec: SensorSpec,
) -> Result<Vec<(CellCoord, i32)>> {
    world.check(center)?;
    if world.size() != belief.size() {
        return Err(Error::InvalidParameter(format!(
            "world size {} differs from belief size {}",
            world.size(),
            belief.size()
        )));
    }
    let cells = window_cells(world.size(), center, spec);
    let mut seen = Vec::with_capacity(cells.len());
    for c in cells {
        let v = world.get(c);
        belief.observe(c, v);
        seen.push((c, v));
    }
    Ok(seen)
}
