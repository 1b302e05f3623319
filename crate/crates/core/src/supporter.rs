//! The aerial supporter: utility-driven exploration target selection,
//! exploration paths with a lawn-mower fallback, and the per-seeker
//! value-of-information ledgers that decide what is worth sending.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sense, CellCoord, OccupancyGrid, SensorSpec};
use crate::planner::{shortest_path, AgentKind, CostParams, Path};
use crate::seeker::PathRequest;

/// Which end of the in-region waypoint list gets the largest RoI coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoiWeightOrder {
    /// α·(v − k + 1): the waypoint nearest the seeker weighs most.
    Prose,
    /// α·k: the waypoint nearest the goal weighs most.
    Formula,
}

impl std::str::FromStr for RoiWeightOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "prose" => Ok(Self::Prose),
            "formula" => Ok(Self::Formula),
            other => Err(Error::Config(format!("unknown roi weight order {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityParams {
    pub w1: f64,
    pub w2: f64,
    pub alpha: f64,
    pub beta: f64,
    /// RoI kernel width in cells.
    pub sigma: f64,
    pub roi_order: RoiWeightOrder,
}

impl Default for UtilityParams {
    fn default() -> Self {
        Self { w1: 0.4, w2: 0.6, alpha: 1000.0, beta: 1.0, sigma: 2.0, roi_order: RoiWeightOrder::Prose }
    }
}

impl UtilityParams {
    pub fn validate(&self) -> Result<()> {
        if self.w1 < 0.0 || self.w2 < 0.0 || self.w1 + self.w2 <= 0.0 {
            return Err(Error::InvalidParameter("utility weights must be nonnegative with a positive sum".into()));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0 && self.sigma > 0.0) {
            return Err(Error::InvalidParameter("alpha, beta and sigma must be positive".into()));
        }
        Ok(())
    }

    fn roi_coefficient(&self, k: usize, v: usize) -> f64 {
        match self.roi_order {
            RoiWeightOrder::Prose => self.alpha * (v - k + 1) as f64,
            RoiWeightOrder::Formula => self.alpha * k as f64,
        }
    }
}

/// Split request waypoints into those the supporter has not explored (χ)
/// and those it has (Υ), both in request order.
pub fn filter_unexplored_waypoints(req: &PathRequest, belief: &OccupancyGrid) -> (Vec<CellCoord>, Vec<CellCoord>) {
    req.waypoints.iter().partition(|c| !belief.is_explored(**c))
}

/// w₁·ε + w₂·‖q_v − q₁‖ / max(‖q_v − p^h‖, 1).
pub fn utility_score(epsilon: f64, chi: &[CellCoord], supporter_pos: CellCoord, params: &UtilityParams) -> Result<f64> {
    let (first, last) = match (chi.first(), chi.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::UndefinedUtility),
    };
    let spread = last.euclidean(first);
    let reach = last.euclidean(&supporter_pos).max(1.0);
    Ok(params.w1 * epsilon + params.w2 * spread / reach)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationTarget {
    pub seeker_id: usize,
    /// χ*, in request order.
    pub waypoints: Vec<CellCoord>,
}

impl ExplorationTarget {
    /// Same seeker and the same waypoint set.
    pub fn same_as(&self, other: &ExplorationTarget) -> bool {
        if self.seeker_id != other.seeker_id || self.waypoints.len() != other.waypoints.len() {
            return false;
        }
        let mut a = self.waypoints.clone();
        let mut b = other.waypoints.clone();
        a.sort();
        b.sort();
        a == b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub seeker_id: usize,
    pub utility: f64,
    pub chi: Vec<CellCoord>,
}

/// Highest utility wins; ties go to the smaller seeker id.
pub fn select_target(candidates: &[Candidate]) -> Option<ExplorationTarget> {
    let mut best: Option<&Candidate> = None;
    for c in candidates.iter().filter(|c| !c.chi.is_empty()) {
        best = match best {
            None => Some(c),
            Some(b) if c.utility > b.utility || (c.utility == b.utility && c.seeker_id < b.seeker_id) => Some(c),
            keep => keep,
        };
    }
    best.map(|c| ExplorationTarget { seeker_id: c.seeker_id, waypoints: c.chi.clone() })
}

/// Visit χ* in reverse: pos → q_v → q_{v−1} → … → q₁, joined without
/// repeating seam cells.
pub fn build_exploration_path(
    supporter_pos: CellCoord,
    chi: &[CellCoord],
    belief: &OccupancyGrid,
    params: &CostParams,
) -> Result<Path> {
    if chi.is_empty() {
        return Err(Error::InvalidParameter("exploration path needs at least one waypoint".into()));
    }
    let mut cells = vec![supporter_pos];
    let mut from = supporter_pos;
    for q in chi.iter().rev() {
        let seg = shortest_path(belief, AgentKind::Supporter, from, *q, params)?
            .ok_or(Error::PlanningFault { from, to: *q })?;
        cells.extend_from_slice(&seg.cells()[1..]);
        from = *q;
    }
    Path::new(cells, AgentKind::Supporter)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SupporterMode {
    /// Cycling the default waypoints; `next` indexes the waypoint being approached.
    Default { next: usize },
    Exploring(ExplorationTarget),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyDecision {
    DefaultPath,
    KeepPath,
    NewPath,
}

/// Per-seeker bookkeeping: what was sent (X_T) and the current VoI field.
#[derive(Debug, Clone)]
pub struct SeekerLedger {
    pub seeker_id: usize,
    size: usize,
    transferred: Vec<bool>,
    transferred_count: usize,
    roi: Vec<f64>,
    voi: Vec<f64>,
    informative: Vec<usize>,
}

impl SeekerLedger {
    pub fn new(seeker_id: usize, size: usize) -> Self {
        Self {
            seeker_id,
            size,
            transferred: vec![false; size * size],
            transferred_count: 0,
            roi: vec![0.0; size * size],
            voi: vec![0.0; size * size],
            informative: Vec::new(),
        }
    }

    fn index(&self, c: CellCoord) -> usize {
        (c.y - 1) * self.size + (c.x - 1)
    }

    pub fn is_transferred(&self, c: CellCoord) -> bool {
        self.transferred[self.index(c)]
    }

    pub fn transferred_count(&self) -> usize {
        self.transferred_count
    }

    pub fn roi(&self, c: CellCoord) -> f64 {
        self.roi[self.index(c)]
    }

    pub fn voi(&self, c: CellCoord) -> f64 {
        self.voi[self.index(c)]
    }

    /// D: cells with nonzero VoI, row-major.
    pub fn informative(&self) -> Vec<CellCoord> {
        let n = self.size;
        self.informative.iter().map(|i| CellCoord::new(i % n + 1, i / n + 1)).collect()
    }

    pub fn informative_count(&self) -> usize {
        self.informative.len()
    }
}

/// Recompute the RoI and VoI fields from the in-region waypoints Υ.
pub fn refresh_ledger(ledger: &mut SeekerLedger, upsilon: &[CellCoord], belief: &OccupancyGrid, params: &UtilityParams) {
    let phi_u = belief.params().phi_u as f64;
    let v = upsilon.len();
    let coeffs: Vec<f64> = (1..=v).map(|k| params.roi_coefficient(k, v)).collect();
    let two_sigma_sq = 2.0 * params.sigma * params.sigma;
    ledger.informative.clear();
    for (i, p) in belief.coords().enumerate() {
        let mut interest = params.beta;
        for (q, a) in upsilon.iter().zip(&coeffs) {
            interest += a * (-p.squared_distance(q) / two_sigma_sq).exp();
        }
        ledger.roi[i] = interest;
        let value = if belief.is_explored(p) {
            let o = belief.get(p) as f64;
            let sent = if ledger.transferred[i] { o } else { phi_u };
            interest * (sent - o)
        } else {
            0.0
        };
        ledger.voi[i] = value;
        if value.abs() > 0.0 {
            ledger.informative.push(i);
        }
    }
}

/// Take the top `grant / b0` informative cells by |VoI| (ties in row-major
/// order), record them as transferred and return them with their occupancy.
pub fn select_cells(
    ledger: &mut SeekerLedger,
    grant: u64,
    b0: u64,
    belief: &OccupancyGrid,
) -> Result<Vec<(CellCoord, i32)>> {
    if b0 == 0 || !grant.is_multiple_of(b0) {
        return Err(Error::ContractViolation(format!("grant {grant} is not a multiple of cell size {b0}")));
    }
    let tau = (grant / b0) as usize;
    if tau > ledger.informative.len() {
        return Err(Error::ContractViolation(format!(
            "grant of {tau} cells exceeds {} informative cells",
            ledger.informative.len()
        )));
    }
    if tau == 0 {
        return Ok(Vec::new());
    }
    let voi = &ledger.voi;
    let mut ranked = ledger.informative.clone();
    // informative is row-major already, so a stable sort keeps the tie rule.
    ranked.sort_by(|a, b| voi[*b].abs().total_cmp(&voi[*a].abs()));
    let chosen: Vec<usize> = ranked[..tau].to_vec();
    let mut out = Vec::with_capacity(tau);
    for i in &chosen {
        let c = belief.coord(*i);
        ledger.transferred[*i] = true;
        ledger.transferred_count += 1;
        ledger.voi[*i] = 0.0;
        out.push((c, belief.get(c)));
    }
    ledger.informative.retain(|i| ledger.voi[*i] != 0.0);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SupporterState {
    pub position: CellCoord,
    pub belief: OccupancyGrid,
    /// Periodic default waypoints; the last equals the first.
    pub default_waypoints: Vec<CellCoord>,
    pub mode: SupporterMode,
    /// Remaining cells to visit, excluding the current position.
    pub current_path: VecDeque<CellCoord>,
    pub ledgers: Vec<SeekerLedger>,
}

impl SupporterState {
    pub fn new(
        position: CellCoord,
        belief: OccupancyGrid,
        default_waypoints: Vec<CellCoord>,
        seeker_ids: &[usize],
    ) -> Result<Self> {
        belief.check(position)?;
        if default_waypoints.is_empty() {
            return Err(Error::InvalidParameter("default waypoints must not be empty".into()));
        }
        let n = belief.size();
        Ok(Self {
            position,
            ledgers: seeker_ids.iter().map(|id| SeekerLedger::new(*id, n)).collect(),
            belief,
            default_waypoints,
            mode: SupporterMode::Default { next: usize::MAX },
            current_path: VecDeque::new(),
        })
    }

    pub fn ledger_mut(&mut self, seeker_id: usize) -> Option<&mut SeekerLedger> {
        self.ledgers.iter_mut().find(|l| l.seeker_id == seeker_id)
    }

    pub fn ledger(&self, seeker_id: usize) -> Option<&SeekerLedger> {
        self.ledgers.iter().find(|l| l.seeker_id == seeker_id)
    }

    pub fn sense_here(&mut self, world: &OccupancyGrid, spec: SensorSpec) -> Result<Vec<(CellCoord, i32)>> {
        sense(world, &mut self.belief, self.position, spec)
    }

    fn cycle_len(&self) -> usize {
        let d = self.default_waypoints.len();
        if d > 1 && self.default_waypoints[0] == self.default_waypoints[d - 1] {
            d - 1
        } else {
            d
        }
    }

    /// Index of the default waypoint closest to the current position.
    pub fn nearest_default_waypoint(&self) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, w) in self.default_waypoints[..self.cycle_len()].iter().enumerate() {
            let d = w.euclidean(&self.position);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    fn set_path(&mut self, path: Path) {
        self.current_path = path.into_cells().into_iter().skip(1).collect();
    }

    fn plan_to(&self, goal: CellCoord, params: &CostParams) -> Result<Path> {
        shortest_path(&self.belief, AgentKind::Supporter, self.position, goal, params)?
            .ok_or(Error::PlanningFault { from: self.position, to: goal })
    }

    fn continue_default(&mut self, params: &CostParams) -> Result<()> {
        let cycle = self.cycle_len();
        let mut next = match self.mode {
            SupporterMode::Default { next } if next < cycle => next,
            _ => {
                let i = self.nearest_default_waypoint();
                self.mode = SupporterMode::Default { next: i };
                self.current_path.clear();
                i
            }
        };
        if !self.current_path.is_empty() {
            return Ok(());
        }
        for _ in 0..=cycle {
            if self.default_waypoints[next] == self.position {
                next = (next + 1) % cycle;
                continue;
            }
            break;
        }
        self.mode = SupporterMode::Default { next };
        let path = self.plan_to(self.default_waypoints[next], params)?;
        self.set_path(path);
        Ok(())
    }

    /// Decide which path to follow this step given the selected target.
    pub fn exploration_policy(
        &mut self,
        target: Option<ExplorationTarget>,
        params: &CostParams,
    ) -> Result<PolicyDecision> {
        match target {
            None => {
                self.continue_default(params)?;
                Ok(PolicyDecision::DefaultPath)
            }
            Some(t) => {
                if let SupporterMode::Exploring(prev) = &self.mode {
                    if prev.same_as(&t) && !self.current_path.is_empty() {
                        return Ok(PolicyDecision::KeepPath);
                    }
                }
                let path = build_exploration_path(self.position, &t.waypoints, &self.belief, params)?;
                self.set_path(path);
                self.mode = SupporterMode::Exploring(t);
                Ok(PolicyDecision::NewPath)
            }
        }
    }

    /// Move one cell along the current path, if any.
    pub fn advance(&mut self) -> Option<CellCoord> {
        let next = self.current_path.pop_front()?;
        self.position = next;
        Some(next)
    }

    /// Score every request with unexplored waypoints and pick the target.
    pub fn choose_target(&self, requests: &[PathRequest], params: &UtilityParams) -> Result<Option<ExplorationTarget>> {
        let mut candidates = Vec::new();
        for req in requests {
            let (chi, _) = filter_unexplored_waypoints(req, &self.belief);
            if chi.is_empty() {
                continue;
            }
            let utility = utility_score(req.epsilon, &chi, self.position, params)?;
            candidates.push(Candidate { seeker_id: req.seeker_id, utility, chi });
        }
        Ok(select_target(&candidates))
    }
}
