//! Procedural worlds: value-noise terrain, perfect mazes with a few loops,
//! and the supporter's boustrophedon default waypoints.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{CellCoord, OccupancyGrid, OccupancyParams};

/// Connectivity retries before terrain generation gives up.
pub const TERRAIN_ATTEMPTS: u32 = 32;

const OCTAVES: &[(f64, f64)] = &[(4.0, 1.0), (8.0, 0.5), (16.0, 0.25)];
// Piecewise-linear noise-to-occupancy ramp as (field value, fraction of the
// phi_min..phi_max span); clamped outside the first and last knots.
const RAMP: &[(f64, f64)] = &[(0.44, 0.0), (0.46, 0.48), (0.56, 0.50), (0.58, 1.0)];

fn ramp(f: f64) -> f64 {
    let (first, last) = (RAMP[0], RAMP[RAMP.len() - 1]);
    if f <= first.0 {
        return first.1;
    }
    for w in RAMP.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if f <= x1 {
            return y0 + (y1 - y0) * (f - x0) / (x1 - x0);
        }
    }
    last.1
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn lattice(seed: u64, octave: usize, i: i64, j: i64) -> f64 {
    let h = mix64(seed ^ mix64(octave as u64 ^ mix64(i as u64 ^ mix64(j as u64))));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Value noise on the unit square. Resolution-independent, so grids of
/// different sizes built from one seed sample the same field. `detail` only
/// reseeds the finer octaves, leaving the coarse layout tied to `seed`.
fn noise_field(seed: u64, detail: u64, u: f64, v: f64) -> f64 {
    let mut total = 0.0;
    let mut norm = 0.0;
    for (o, &(freq, amp)) in OCTAVES.iter().enumerate() {
        let fu = u * freq;
        let fv = v * freq;
        let i = fu.floor() as i64;
        let j = fv.floor() as i64;
        let tu = smooth(fu - i as f64);
        let tv = smooth(fv - j as f64);
        let s = if o == 0 { seed } else { seed ^ mix64(detail) };
        let a = lattice(s, o, i, j);
        let b = lattice(s, o, i + 1, j);
        let c = lattice(s, o, i, j + 1);
        let d = lattice(s, o, i + 1, j + 1);
        let top = a + (b - a) * tu;
        let bottom = c + (d - c) * tu;
        total += amp * (top + (bottom - top) * tv);
        norm += amp;
    }
    total / norm
}

fn terrain_candidate(n: usize, seed: u64, detail: u64, params: &OccupancyParams) -> Result<OccupancyGrid> {
    let span = (params.phi_max - params.phi_min) as f64;
    let mut values = Vec::with_capacity(n * n);
    for y in 1..=n {
        for x in 1..=n {
            let u = (x as f64 - 0.5) / n as f64;
            let v = (y as f64 - 0.5) / n as f64;
            let f = noise_field(seed, detail, u, v);
            let t = ramp(f);
            values.push(params.phi_min + (t * span).round() as i32);
        }
    }
    OccupancyGrid::from_values(n, *params, values)
}

/// Component labels over traversable cells (4-connectivity); `usize::MAX` marks obstacles.
pub fn traversable_components(grid: &OccupancyGrid) -> Vec<usize> {
    let mut label = vec![usize::MAX; grid.size() * grid.size()];
    let mut next = 0;
    for start in grid.coords() {
        if !grid.is_traversable(start) || label[grid.index(start)] != usize::MAX {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        label[grid.index(start)] = next;
        while let Some(c) = queue.pop_front() {
            for nb in grid.neighbors4(c) {
                let i = grid.index(nb);
                if grid.is_traversable(nb) && label[i] == usize::MAX {
                    label[i] = next;
                    queue.push_back(nb);
                }
            }
        }
        next += 1;
    }
    label
}

fn border_connected(grid: &OccupancyGrid) -> bool {
    let labels = traversable_components(grid);
    let n = grid.size();
    let mut border = grid
        .coords()
        .filter(|c| c.x == 1 || c.y == 1 || c.x == n || c.y == n)
        .map(|c| labels[grid.index(c)])
        .filter(|l| *l != usize::MAX);
    match border.next() {
        None => false,
        Some(first) => border.all(|l| l == first),
    }
}

/// Smooth terrain with integer occupancy in `[phi_min, phi_max]`; cells above
/// `phi_obs` are obstacles. All traversable border cells are mutually reachable.
pub fn generate_terrain(n: usize, seed: u64, params: &OccupancyParams) -> Result<OccupancyGrid> {
    if n < 8 {
        return Err(Error::InvalidParameter(format!("terrain size must be at least 8, got {n}")));
    }
    params.validate()?;
    for attempt in 0..TERRAIN_ATTEMPTS {
        // early retries perturb fine detail only, so the map stays recognisable
        // across sizes; later ones give up on the coarse layout too
        let a = attempt as u64;
        let grid = if attempt < TERRAIN_ATTEMPTS / 2 {
            terrain_candidate(n, seed, a, params)?
        } else {
            terrain_candidate(n, seed.wrapping_add(a.wrapping_mul(0xD1B5_4A32_D192_ED03)), a, params)?
        };
        if border_connected(&grid) {
            return Ok(grid);
        }
    }
    Err(Error::GenerationFailed { attempts: TERRAIN_ATTEMPTS })
}

/// Binary maze: recursive backtracker over odd lattice cells, then a few
/// wall knock-outs to open loops. Walls are `phi_max`, corridors `phi_min`.
pub fn generate_maze(n: usize, seed: u64, params: &OccupancyParams) -> Result<OccupancyGrid> {
    if n < 8 {
        return Err(Error::InvalidParameter(format!("maze size must be at least 8, got {n}")));
    }
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // 0-based lattice cells sit at odd offsets 1, 3, ..., 2k-1.
    let k = (n - 1) / 2;
    let mut open = vec![false; n * n];
    let idx = |x: usize, y: usize| y * n + x;
    let mut visited = vec![false; k * k];
    let mut stack = vec![(0usize, 0usize)];
    visited[0] = true;
    open[idx(1, 1)] = true;
    while let Some(&(cx, cy)) = stack.last() {
        let mut options = Vec::with_capacity(4);
        if cx > 0 && !visited[cy * k + cx - 1] {
            options.push((cx - 1, cy));
        }
        if cx + 1 < k && !visited[cy * k + cx + 1] {
            options.push((cx + 1, cy));
        }
        if cy > 0 && !visited[(cy - 1) * k + cx] {
            options.push((cx, cy - 1));
        }
        if cy + 1 < k && !visited[(cy + 1) * k + cx] {
            options.push((cx, cy + 1));
        }
        match options.choose(&mut rng) {
            None => {
                stack.pop();
            }
            Some(&(nx, ny)) => {
                visited[ny * k + nx] = true;
                open[idx(2 * nx + 1, 2 * ny + 1)] = true;
                open[idx(cx + nx + 1, cy + ny + 1)] = true;
                stack.push((nx, ny));
            }
        }
    }

    // Knock out walls separating two lattice cells to create loops.
    let removals = k * k / 10;
    let mut done = 0;
    let mut tries = 0;
    while done < removals && tries < removals * 20 {
        tries += 1;
        let cx = rng.gen_range(0..k);
        let cy = rng.gen_range(0..k);
        let horizontal = rng.gen_bool(0.5);
        let (wx, wy) = if horizontal {
            if cx + 1 >= k {
                continue;
            }
            (2 * cx + 2, 2 * cy + 1)
        } else {
            if cy + 1 >= k {
                continue;
            }
            (2 * cx + 1, 2 * cy + 2)
        };
        if !open[idx(wx, wy)] {
            open[idx(wx, wy)] = true;
            done += 1;
        }
    }

    let values = open.iter().map(|o| if *o { params.phi_min } else { params.phi_max }).collect();
    OccupancyGrid::from_values(n, *params, values)
}

/// Boustrophedon sweep waypoints. Rows start `spacing / 2` cells in from the
/// edge and repeat every `spacing` rows; the first waypoint is repeated at
/// the end so the path is periodic.
pub fn lawnmower_waypoints(n: usize, spacing: usize) -> Result<Vec<CellCoord>> {
    if spacing < 1 || spacing >= n {
        return Err(Error::InvalidParameter(format!("lawn-mower spacing must be in [1, {}), got {spacing}", n)));
    }
    let margin = (spacing / 2).max(1);
    let far = n + 1 - margin;
    let mut rows = Vec::new();
    let mut y = margin;
    while y <= far {
        rows.push(y);
        y += spacing;
    }
    let last = *rows.last().expect("margin <= far");
    if last + spacing.div_ceil(2) < n && far > last {
        rows.push(far);
    }
    let mut waypoints: Vec<CellCoord> = Vec::with_capacity(2 * rows.len() + 1);
    for (i, y) in rows.iter().enumerate() {
        let (a, b) = if i % 2 == 0 { (margin, far) } else { (far, margin) };
        for x in [a, b] {
            let c = CellCoord::new(x, *y);
            if waypoints.last() != Some(&c) {
                waypoints.push(c);
            }
        }
    }
    waypoints.push(waypoints[0]);
    Ok(waypoints)
}
