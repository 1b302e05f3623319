//! Edge costs and optimal grid paths for both agent kinds.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellCoord, OccupancyGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    /// Ground agent: 4-connected, occupancy-priced moves.
    Seeker,
    /// Aerial agent: 8-connected, occupancy ignored.
    Supporter,
}

const LATERAL: [(isize, isize); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
const KING: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

impl AgentKind {
    pub fn moves(&self) -> &'static [(isize, isize)] {
        match self {
            AgentKind::Seeker => &LATERAL,
            AgentKind::Supporter => &KING,
        }
    }

    pub fn is_adjacent(&self, a: CellCoord, b: CellCoord) -> bool {
        let dx = a.x.abs_diff(b.x);
        let dy = a.y.abs_diff(b.y);
        match self {
            AgentKind::Seeker => dx + dy == 1,
            AgentKind::Supporter => dx.max(dy) == 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Lateral edge cost.
    pub lambda1: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self { lambda1: 1.0 }
    }
}

impl CostParams {
    pub fn new(lambda1: f64) -> Result<Self> {
        if !(lambda1 > 0.0 && lambda1.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda1 must be positive, got {lambda1}")));
        }
        Ok(Self { lambda1 })
    }

    pub fn lateral(&self) -> f64 {
        self.lambda1
    }

    pub fn diagonal(&self) -> f64 {
        self.lambda1 * SQRT_2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Lateral,
    Diagonal,
}

pub fn edge_cost_seeker(dest_occupancy: i32, params: &CostParams, phi_obs: i32) -> f64 {
    if dest_occupancy <= phi_obs {
        dest_occupancy as f64 + params.lambda1
    } else {
        f64::INFINITY
    }
}

pub fn edge_cost_supporter(mv: Move, params: &CostParams) -> f64 {
    match mv {
        Move::Lateral => params.lateral(),
        Move::Diagonal => params.diagonal(),
    }
}

fn step_cost(kind: AgentKind, from: CellCoord, to: CellCoord, belief: &OccupancyGrid, params: &CostParams) -> f64 {
    match kind {
        AgentKind::Seeker => edge_cost_seeker(belief.get(to), params, belief.params().phi_obs),
        AgentKind::Supporter => {
            let mv = if from.x != to.x && from.y != to.y { Move::Diagonal } else { Move::Lateral };
            edge_cost_supporter(mv, params)
        }
    }
}

/// A nonempty cell sequence whose consecutive cells are one move apart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    cells: Vec<CellCoord>,
}

impl Path {
    pub fn new(cells: Vec<CellCoord>, kind: AgentKind) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidPath("path must contain at least one cell".into()));
        }
        if let Some(w) = cells.windows(2).find(|w| !kind.is_adjacent(w[0], w[1])) {
            return Err(Error::InvalidPath(format!("{} -> {} is not a {kind:?} move", w[0], w[1])));
        }
        Ok(Self { cells })
    }

    pub fn single(cell: CellCoord) -> Self {
        Self { cells: vec![cell] }
    }

    pub fn cells(&self) -> &[CellCoord] {
        &self.cells
    }

    pub fn into_cells(self) -> Vec<CellCoord> {
        self.cells
    }

    pub fn start(&self) -> CellCoord {
        self.cells[0]
    }

    pub fn end(&self) -> CellCoord {
        *self.cells.last().expect("nonempty")
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.cells.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.cells.len() == 1
    }
}

/// Sum of edge costs along `path`; a one-cell path costs 0.
pub fn path_cost(path: &[CellCoord], kind: AgentKind, belief: &OccupancyGrid, params: &CostParams) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::InvalidPath("empty path".into()));
    }
    let mut total = 0.0;
    for w in path.windows(2) {
        belief.check(w[1])?;
        if !kind.is_adjacent(w[0], w[1]) {
            return Err(Error::InvalidPath(format!("{} -> {} is not a {kind:?} move", w[0], w[1])));
        }
        total += step_cost(kind, w[0], w[1], belief, params);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Frontier {
    cost: f64,
    key: (usize, usize),
    index: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    // Min-heap on (cost, (y, x)).
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.key.cmp(&self.key))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-cost path under the belief grid (Dijkstra). Equal-cost frontier
/// entries are expanded in ascending `(y, x)` order. Returns `Ok(None)` when
/// the goal cannot be reached.
pub fn shortest_path(
    belief: &OccupancyGrid,
    kind: AgentKind,
    start: CellCoord,
    goal: CellCoord,
    params: &CostParams,
) -> Result<Option<Path>> {
    belief.check(start)?;
    belief.check(goal)?;
    if start == goal {
        return Ok(Some(Path::single(start)));
    }
    if kind == AgentKind::Seeker && !belief.is_traversable(goal) {
        return Ok(None);
    }
    let n = belief.size();
    let mut dist = vec![f64::INFINITY; n * n];
    let mut prev = vec![usize::MAX; n * n];
    let mut done = vec![false; n * n];
    let s = belief.index(start);
    let g = belief.index(goal);
    dist[s] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Frontier { cost: 0.0, key: start.row_major_key(), index: s });
    while let Some(Frontier { cost, index, .. }) = heap.pop() {
        if done[index] {
            continue;
        }
        done[index] = true;
        if index == g {
            break;
        }
        let here = belief.coord(index);
        for (dx, dy) in kind.moves() {
            let Some(next) = belief.offset(here, *dx, *dy) else { continue };
            let j = belief.index(next);
            if done[j] {
                continue;
            }
            let c = step_cost(kind, here, next, belief, params);
            if !c.is_finite() {
                continue;
            }
            let nc = cost + c;
            if nc < dist[j] {
                dist[j] = nc;
                prev[j] = index;
                heap.push(Frontier { cost: nc, key: next.row_major_key(), index: j });
            }
        }
    }
    if !dist[g].is_finite() {
        return Ok(None);
    }
    let mut cells = vec![goal];
    let mut at = g;
    while at != s {
        at = prev[at];
        cells.push(belief.coord(at));
    }
    cells.reverse();
    Ok(Some(Path { cells }))
}

/// Octile distance scaled by λ₁: the supporter's exact path cost on any grid.
pub fn octile_distance(a: CellCoord, b: CellCoord, params: &CostParams) -> f64 {
    let dx = a.x.abs_diff(b.x);
    let dy = a.y.abs_diff(b.y);
    let (lo, hi) = (dx.min(dy), dx.max(dy));
    params.diagonal() * lo as f64 + params.lateral() * (hi - lo) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::OccupancyParams;

    fn grid(n: usize, values: Vec<i32>) -> OccupancyGrid {
        OccupancyGrid::from_values(n, OccupancyParams::default(), values).unwrap()
    }

    fn c(x: usize, y: usize) -> CellCoord {
        CellCoord::new(x, y)
    }

    #[test]
    fn seeker_edge_costs() {
        let p = CostParams::default();
        assert_eq!(edge_cost_seeker(30, &p, 50), 31.0);
        assert_eq!(edge_cost_seeker(60, &p, 50), f64::INFINITY);
        assert_eq!(edge_cost_seeker(50, &p, 50), 51.0);
    }

    #[test]
    fn supporter_edge_costs() {
        let p = CostParams::default();
        assert_eq!(edge_cost_supporter(Move::Lateral, &p), 1.0);
        assert!((edge_cost_supporter(Move::Diagonal, &p) - 2f64.sqrt()).abs() < 1e-15);
        let p2 = CostParams::new(2.0).unwrap();
        assert_eq!(edge_cost_supporter(Move::Diagonal, &p2), 2.0 * SQRT_2);
        assert!(CostParams::new(0.0).is_err());
    }

    #[test]
    fn path_cost_examples() {
        let p = CostParams::default();
        let g = grid(3, vec![0, 10, 20, 0, 0, 0, 0, 0, 0]);
        assert_eq!(path_cost(&[c(2, 2)], AgentKind::Seeker, &g, &p).unwrap(), 0.0);
        let seeker = [c(1, 1), c(2, 1), c(3, 1)];
        assert_eq!(path_cost(&seeker, AgentKind::Seeker, &g, &p).unwrap(), 32.0);
        let sup = [c(1, 1), c(2, 1), c(3, 2)];
        assert_eq!(path_cost(&sup, AgentKind::Supporter, &g, &p).unwrap(), 1.0 + SQRT_2);
        assert!(matches!(
            path_cost(&[c(1, 1), c(2, 2)], AgentKind::Seeker, &g, &p),
            Err(Error::InvalidPath(_))
        ));
    }

    #[test]
    fn trivial_paths() {
        let p = CostParams::default();
        let g = grid(3, vec![0; 9]);
        let path = shortest_path(&g, AgentKind::Seeker, c(2, 2), c(2, 2), &p).unwrap().unwrap();
        assert_eq!(path.cells(), &[c(2, 2)]);
        let path = shortest_path(&g, AgentKind::Seeker, c(1, 1), c(3, 1), &p).unwrap().unwrap();
        assert_eq!(path_cost(path.cells(), AgentKind::Seeker, &g, &p).unwrap(), 2.0);
    }

    #[test]
    fn out_of_bounds_endpoints() {
        let g = grid(3, vec![0; 9]);
        let err = shortest_path(&g, AgentKind::Seeker, c(0, 1), c(3, 3), &CostParams::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidCoordinate { .. }));
    }

    #[test]
    fn blocked_goal_has_no_path() {
        let g = grid(3, vec![0, 0, 0, 0, 0, 0, 0, 0, 90]);
        assert!(shortest_path(&g, AgentKind::Seeker, c(1, 1), c(3, 3), &CostParams::default()).unwrap().is_none());
        let wall = grid(3, vec![0, 90, 0, 0, 90, 0, 0, 90, 0]);
        assert!(shortest_path(&wall, AgentKind::Seeker, c(1, 1), c(3, 3), &CostParams::default()).unwrap().is_none());
        assert!(shortest_path(&wall, AgentKind::Supporter, c(1, 1), c(3, 3), &CostParams::default())
            .unwrap()
            .is_some());
    }

    #[test]
    fn tie_break_prefers_row_major_order() {
        // Both L-shaped routes cost 2; expansion order picks the one through (2,1).
        let g = grid(2, vec![0; 4]);
        let p = shortest_path(&g, AgentKind::Seeker, c(1, 1), c(2, 2), &CostParams::default()).unwrap().unwrap();
        assert_eq!(p.cells(), &[c(1, 1), c(2, 1), c(2, 2)]);
    }

    #[test]
    fn unknown_belief_is_fully_plannable() {
        let b = OccupancyGrid::unknown(10, OccupancyParams::default()).unwrap();
        for (s, g) in [(c(1, 1), c(10, 10)), (c(5, 2), c(3, 9))] {
            let p = shortest_path(&b, AgentKind::Seeker, s, g, &CostParams::default()).unwrap().unwrap();
            assert_eq!(p.start(), s);
            assert_eq!(p.end(), g);
        }
    }

    #[test]
    fn supporter_cost_is_octile() {
        let p = CostParams::default();
        let g = grid(8, (0..64).map(|i| i * 37 % 101).collect());
        let path = shortest_path(&g, AgentKind::Supporter, c(1, 1), c(6, 8), &p).unwrap().unwrap();
        let cost = path_cost(path.cells(), AgentKind::Supporter, &g, &p).unwrap();
        assert!((cost - octile_distance(c(1, 1), c(6, 8), &p)).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_grid() -> impl Strategy<Value = (usize, Vec<i32>)> {
            (3usize..8).prop_flat_map(|n| (Just(n), proptest::collection::vec(0i32..=100, n * n)))
        }

        proptest! {
            #[test]
            fn raising_occupancy_never_lowers_cost(
                (n, values) in arb_grid(),
                cell in 0usize..64,
                bump in 1i32..60,
                sx in 1usize..8, sy in 1usize..8, gx in 1usize..8, gy in 1usize..8,
            ) {
                prop_assume!(sx <= n && sy <= n && gx <= n && gy <= n);
                let p = CostParams::default();
                let g = grid(n, values.clone());
                let mut raised = values;
                let k = cell % (n * n);
                raised[k] = (raised[k] + bump).min(100);
                let h = grid(n, raised);
                let cost = |g: &OccupancyGrid| {
                    shortest_path(g, AgentKind::Seeker, c(sx, sy), c(gx, gy), &p)
                        .unwrap()
                        .map(|path| path_cost(path.cells(), AgentKind::Seeker, g, &p).unwrap())
                        .unwrap_or(f64::INFINITY)
                };
                prop_assert!(cost(&h) >= cost(&g));
            }

            #[test]
            fn paths_are_deterministic_and_well_formed(
                (n, values) in arb_grid(),
                sx in 1usize..8, sy in 1usize..8, gx in 1usize..8, gy in 1usize..8,
                supporter in any::<bool>(),
            ) {
                prop_assume!(sx <= n && sy <= n && gx <= n && gy <= n);
                let kind = if supporter { AgentKind::Supporter } else { AgentKind::Seeker };
                let g = grid(n, values);
                let p = CostParams::default();
                let a = shortest_path(&g, kind, c(sx, sy), c(gx, gy), &p).unwrap();
                let b = shortest_path(&g, kind, c(sx, sy), c(gx, gy), &p).unwrap();
                prop_assert_eq!(&a, &b);
                if let Some(path) = a {
                    prop_assert!(Path::new(path.cells().to_vec(), kind).is_ok());
                    prop_assert_eq!(path.start(), c(sx, sy));
                    prop_assert_eq!(path.end(), c(gx, gy));
                }
            }
        }
    }
}
