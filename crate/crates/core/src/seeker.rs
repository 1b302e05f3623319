//! Ground seekers: replan on the belief grid, request help, absorb
//! transmitted cells and walk towards the goal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sense, CellCoord, OccupancyGrid, SensorSpec};
use crate::planner::{edge_cost_seeker, shortest_path, AgentKind, CostParams, Path};

/// A seeker's per-step message: sampled unexplored waypoints of its current
/// plan and the fraction of that plan lying in unexplored cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRequest {
    pub seeker_id: usize,
    /// Ordered from the seeker towards its goal.
    pub waypoints: Vec<CellCoord>,
    pub epsilon: f64,
}

/// Cells `plan[m·k]` for k = 1..⌊ℓ/m⌋ that the seeker has not explored, in order.
pub fn sample_waypoints(plan: &[CellCoord], belief: &OccupancyGrid, m: usize) -> Vec<CellCoord> {
    assert!(m >= 1, "sampling interval must be positive");
    let ell = plan.len().saturating_sub(1);
    (1..=ell / m).map(|k| plan[m * k]).filter(|c| !belief.is_explored(*c)).collect()
}

/// Share of plan cells (start included) that are unexplored.
pub fn path_uncertainty(plan: &[CellCoord], belief: &OccupancyGrid) -> f64 {
    if plan.is_empty() {
        return 0.0;
    }
    let unknown = plan.iter().filter(|c| !belief.is_explored(**c)).count();
    unknown as f64 / plan.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveOutcome {
    Moved(CellCoord),
    /// The next planned cell is an obstacle in the true world; the caller replans.
    Refused(CellCoord),
}

#[derive(Debug, Clone)]
pub struct SeekerState {
    pub id: usize,
    pub position: CellCoord,
    pub start: CellCoord,
    pub goal: CellCoord,
    pub belief: OccupancyGrid,
    pub current_plan: Path,
    pub nav_cost: f64,
    pub active: bool,
    pub trajectory: Vec<CellCoord>,
    pub cells_received: u64,
    pub finished_at: Option<u64>,
}

impl SeekerState {
    pub fn new(id: usize, start: CellCoord, goal: CellCoord, belief: OccupancyGrid) -> Result<Self> {
        belief.check(start)?;
        belief.check(goal)?;
        Ok(Self {
            id,
            position: start,
            start,
            goal,
            belief,
            current_plan: Path::single(start),
            nav_cost: 0.0,
            active: start != goal,
            trajectory: vec![start],
            cells_received: 0,
            finished_at: None,
        })
    }

    pub fn sense_here(&mut self, world: &OccupancyGrid, spec: SensorSpec) -> Result<()> {
        sense(world, &mut self.belief, self.position, spec)?;
        Ok(())
    }

    pub fn replan(&mut self, params: &CostParams) -> Result<()> {
        let plan = shortest_path(&self.belief, AgentKind::Seeker, self.position, self.goal, params)?
            .ok_or(Error::PlanningFault { from: self.position, to: self.goal })?;
        self.current_plan = plan;
        Ok(())
    }

    /// Replan on the current belief and build the outgoing request.
    pub fn plan_and_request(&mut self, m: usize, params: &CostParams) -> Result<PathRequest> {
        if !self.active {
            return Err(Error::ContractViolation(format!("seeker {} is not active", self.id)));
        }
        if m == 0 {
            return Err(Error::InvalidParameter("sampling interval m must be at least 1".into()));
        }
        self.replan(params)?;
        let plan = self.current_plan.cells();
        Ok(PathRequest {
            seeker_id: self.id,
            waypoints: sample_waypoints(plan, &self.belief, m),
            epsilon: path_uncertainty(plan, &self.belief),
        })
    }

    /// Write received cells into the belief. Returns whether anything changed.
    pub fn merge_received(&mut self, cells: &[(CellCoord, i32)]) -> Result<bool> {
        if let Some((c, _)) = cells.iter().find(|(c, _)| !self.belief.contains(*c)) {
            return Err(Error::Protocol(format!("received cell {c} outside the {0}x{0} grid", self.belief.size())));
        }
        let mut changed = false;
        for &(c, v) in cells {
            if !self.belief.is_explored(c) || self.belief.get(c) != v {
                changed = true;
            }
            self.belief.observe(c, v);
        }
        self.cells_received += cells.len() as u64;
        Ok(changed)
    }

    /// Advance one cell along the current plan, paying the true edge cost.
    pub fn step_move(&mut self, world: &OccupancyGrid, spec: SensorSpec, params: &CostParams) -> Result<MoveOutcome> {
        if !self.active {
            return Err(Error::ContractViolation(format!("seeker {} is not active", self.id)));
        }
        let plan = self.current_plan.cells();
        if plan.len() < 2 || plan[0] != self.position {
            return Err(Error::ContractViolation(format!("seeker {} has no plan from {}", self.id, self.position)));
        }
        let next = plan[1];
        let truth = world.get(next);
        let phi_obs = world.params().phi_obs;
        if truth > phi_obs {
            self.belief.observe(next, truth);
            return Ok(MoveOutcome::Refused(next));
        }
        self.nav_cost += edge_cost_seeker(truth, params, phi_obs);
        self.position = next;
        self.trajectory.push(next);
        self.current_plan = Path::new(plan[1..].to_vec(), AgentKind::Seeker)?;
        self.sense_here(world, spec)?;
        if self.position == self.goal {
            self.active = false;
        }
        Ok(MoveOutcome::Moved(next))
    }
}
