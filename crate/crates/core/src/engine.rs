//! Per-timestep orchestration of one supporter and several seekers.
//!
//! Every step runs the same phases in the same order:
//!
//! 1. each active seeker (ascending id) replans and emits a [`PathRequest`];
//! 2. the supporter picks its path, moves one cell and senses;
//! 3. on communication steps, cells are delivered according to the framework;
//! 4. each active seeker merges what it received, replans if needed, moves
//!    one cell and senses;
//! 5. seekers standing on their goal leave the active set.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::allocator::{allocate, AllocationProblem};
use crate::error::{Error, Result};
use crate::events::{cell_triples, xy, Event};
use crate::grid::{CellCoord, OccupancyGrid, OccupancyParams, SensorSpec};
use crate::mapgen::lawnmower_waypoints;
use crate::planner::{shortest_path, AgentKind, CostParams};
use crate::seeker::{MoveOutcome, PathRequest, SeekerState};
use crate::supporter::{filter_unexplored_waypoints, refresh_ledger, select_cells, SupporterState, UtilityParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CommMode {
    /// No transmissions.
    Ui,
    /// Unbudgeted broadcast of the supporter's sensing window.
    Fi,
    /// Budgeted VoI-selected cells.
    Milp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Exploration {
    LawnMower,
    Utility,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Framework {
    pub comm: CommMode,
    pub exploration: Exploration,
}

impl Framework {
    pub const UI: Framework = Framework { comm: CommMode::Ui, exploration: Exploration::LawnMower };
    pub const FI0: Framework = Framework { comm: CommMode::Fi, exploration: Exploration::LawnMower };
    pub const FI1: Framework = Framework { comm: CommMode::Fi, exploration: Exploration::Utility };
    pub const MILP0: Framework = Framework { comm: CommMode::Milp, exploration: Exploration::LawnMower };
    pub const MILP1: Framework = Framework { comm: CommMode::Milp, exploration: Exploration::Utility };

    pub const ALL: [Framework; 5] = [Self::UI, Self::FI0, Self::FI1, Self::MILP0, Self::MILP1];

    pub fn label(&self) -> &'static str {
        match (self.comm, self.exploration) {
            (CommMode::Ui, _) => "UI",
            (CommMode::Fi, Exploration::LawnMower) => "FI0",
            (CommMode::Fi, Exploration::Utility) => "FI1",
            (CommMode::Milp, Exploration::LawnMower) => "MILP0",
            (CommMode::Milp, Exploration::Utility) => "MILP1",
        }
    }

    pub fn uses_bandwidth(&self) -> bool {
        self.comm == CommMode::Milp
    }
}

impl fmt::Display for Framework {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Framework {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace(['₀', '_'], "").replace('₁', "1");
        let norm = if s.contains('₀') { format!("{norm}0") } else { norm };
        match norm.as_str() {
            "UI" => Ok(Self::UI),
            "FI0" => Ok(Self::FI0),
            "FI1" => Ok(Self::FI1),
            "MILP0" => Ok(Self::MILP0),
            "MILP1" => Ok(Self::MILP1),
            _ => Err(Error::Config(format!("unknown framework {s:?} (expected UI, FI0, FI1, MILP0 or MILP1)"))),
        }
    }
}

impl Serialize for Framework {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Framework {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How full-information broadcasts are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiAccounting {
    /// One window's worth of cells per step, however many seekers listen.
    Broadcast,
    /// One window per active seeker per step.
    PerSeeker,
}

impl FromStr for FiAccounting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "broadcast" => Ok(Self::Broadcast),
            "per-seeker" | "per_seeker" => Ok(Self::PerSeeker),
            other => Err(Error::Config(format!("unknown fi accounting {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Seeker sensing window n^r.
    pub seeker_window: usize,
    /// Supporter sensing window n^h.
    pub supporter_window: usize,
    /// Waypoint sampling interval m.
    pub sample_interval: usize,
    /// Communication period T in steps.
    pub comm_period: u64,
    /// Budget B per communication event.
    pub bandwidth: u64,
    /// Size b₀ of one transmitted cell in bandwidth units.
    pub cell_size: u64,
    pub lambda1: f64,
    pub utility: UtilityParams,
    /// Occupancy levels used when generating worlds.
    pub occupancy: OccupancyParams,
    /// Defaults to 10·N².
    pub max_steps: Option<u64>,
    /// Lawn-mower row spacing; defaults to the supporter window.
    pub lawnmower_spacing: Option<usize>,
    pub fi_accounting: FiAccounting,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seeker_window: 3,
            supporter_window: 7,
            sample_interval: 3,
            comm_period: 1,
            bandwidth: 27,
            cell_size: 1,
            lambda1: 1.0,
            utility: UtilityParams::default(),
            occupancy: OccupancyParams::default(),
            max_steps: None,
            lawnmower_spacing: None,
            fi_accounting: FiAccounting::Broadcast,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, grid_size: usize) -> Result<()> {
        SensorSpec::new(self.seeker_window, grid_size)?;
        SensorSpec::new(self.supporter_window, grid_size)?;
        if self.sample_interval == 0 {
            return Err(Error::Config("sample interval m must be at least 1".into()));
        }
        if self.comm_period == 0 {
            return Err(Error::Config("communication period T must be at least 1".into()));
        }
        if self.bandwidth == 0 {
            return Err(Error::Config("bandwidth B must be positive".into()));
        }
        if self.cell_size == 0 {
            return Err(Error::Config("cell size b0 must be positive".into()));
        }
        CostParams::new(self.lambda1)?;
        self.utility.validate()?;
        self.occupancy.validate()?;
        Ok(())
    }

    pub fn max_steps_for(&self, grid_size: usize) -> u64 {
        self.max_steps.unwrap_or(10 * (grid_size * grid_size) as u64)
    }
}

/// Endpoints for one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub starts: Vec<CellCoord>,
    pub goals: Vec<CellCoord>,
    /// Defaults to the first lawn-mower waypoint.
    pub supporter_start: Option<CellCoord>,
}

impl Scenario {
    /// Checks bounds, traversability and that every seeker has a true path.
    pub fn validate(&self, world: &OccupancyGrid) -> Result<()> {
        if self.starts.is_empty() {
            return Err(Error::Config("at least one seeker is required".into()));
        }
        if self.starts.len() != self.goals.len() {
            return Err(Error::Config(format!("{} starts but {} goals", self.starts.len(), self.goals.len())));
        }
        if let Some(s) = self.supporter_start {
            world.check(s).map_err(|e| Error::Config(e.to_string()))?;
        }
        for (i, (s, g)) in self.starts.iter().zip(&self.goals).enumerate() {
            for c in [s, g] {
                world.check(*c).map_err(|e| Error::Config(format!("seeker {}: {e}", i + 1)))?;
                if !world.is_traversable(*c) {
                    return Err(Error::Config(format!("seeker {}: endpoint {c} is an obstacle", i + 1)));
                }
            }
            if shortest_path(world, AgentKind::Seeker, *s, *g, &CostParams::default())?.is_none() {
                return Err(Error::Config(format!("seeker {}: no feasible path from {s} to {g}", i + 1)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeekerMetrics {
    pub id: usize,
    pub nav_cost: f64,
    pub cells_received: u64,
    pub steps_to_goal: Option<u64>,
    pub reached_goal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub framework: Framework,
    /// Budget B, for bandwidth-limited frameworks only.
    pub bandwidth: Option<u64>,
    pub seed: u64,
    pub steps: u64,
    /// False when the step limit was hit with seekers still active.
    pub completed: bool,
    pub total_nav_cost: f64,
    /// Supporter data in cells, under the framework's accounting.
    pub total_data: u64,
    /// Largest number of cells delivered in a single step.
    pub peak_step_delivery: u64,
    pub seekers: Vec<SeekerMetrics>,
}

/// A running episode. Drive it with [`Simulation::step`] or [`Simulation::run`].
pub struct Simulation<'w> {
    world: &'w OccupancyGrid,
    config: SimConfig,
    framework: Framework,
    cost: CostParams,
    seeker_spec: SensorSpec,
    supporter_spec: SensorSpec,
    team_size: usize,
    pub seekers: Vec<SeekerState>,
    pub supporter: SupporterState,
    step: u64,
    max_steps: u64,
    total_data: u64,
    peak_step_delivery: u64,
    sent: Vec<HashSet<CellCoord>>,
    events: Option<Vec<Event>>,
}

impl<'w> Simulation<'w> {
    pub fn new(world: &'w OccupancyGrid, scenario: &Scenario, config: &SimConfig, framework: Framework) -> Result<Self> {
        let n = world.size();
        config.validate(n)?;
        scenario.validate(world)?;
        let cost = CostParams::new(config.lambda1)?;
        let seeker_spec = SensorSpec::new(config.seeker_window, n)?;
        let supporter_spec = SensorSpec::new(config.supporter_window, n)?;
        let spacing = config.lawnmower_spacing.unwrap_or(config.supporter_window);
        let waypoints = lawnmower_waypoints(n, spacing).map_err(|e| Error::Config(e.to_string()))?;
        let supporter_start = scenario.supporter_start.unwrap_or(waypoints[0]);
        let params = *world.params();

        let mut seekers = Vec::with_capacity(scenario.starts.len());
        for (i, (s, g)) in scenario.starts.iter().zip(&scenario.goals).enumerate() {
            let mut seeker = SeekerState::new(i + 1, *s, *g, OccupancyGrid::unknown(n, params)?)?;
            seeker.sense_here(world, seeker_spec)?;
            if !seeker.active {
                seeker.finished_at = Some(0);
            }
            seekers.push(seeker);
        }
        let ids: Vec<usize> = seekers.iter().map(|s| s.id).collect();
        let mut supporter = SupporterState::new(supporter_start, OccupancyGrid::unknown(n, params)?, waypoints, &ids)?;
        supporter.sense_here(world, supporter_spec)?;

        Ok(Self {
            world,
            config: config.clone(),
            framework,
            cost,
            seeker_spec,
            supporter_spec,
            team_size: seekers.len(),
            sent: vec![HashSet::new(); seekers.len()],
            seekers,
            supporter,
            step: 0,
            max_steps: config.max_steps_for(n),
            total_data: 0,
            peak_step_delivery: 0,
            events: None,
        })
    }

    /// Record an event log while running.
    pub fn with_events(mut self) -> Self {
        self.events = Some(vec![Event::Start {
            framework: self.framework.label().to_string(),
            size: self.world.size(),
            supporter: xy(self.supporter.position),
            starts: self.seekers.iter().map(|s| xy(s.start)).collect(),
            goals: self.seekers.iter().map(|s| xy(s.goal)).collect(),
        }]);
        self
    }

    pub fn current_step(&self) -> u64 {
        self.step
    }

    pub fn total_data(&self) -> u64 {
        self.total_data
    }

    pub fn is_done(&self) -> bool {
        self.seekers.iter().all(|s| !s.active)
    }

    fn emit(&mut self, event: Event) {
        if let Some(log) = self.events.as_mut() {
            log.push(event);
        }
    }

    /// Advance one timestep.
    pub fn step(&mut self) -> Result<()> {
        if self.is_done() {
            return Err(Error::ContractViolation("episode already finished".into()));
        }
        self.step += 1;
        let t = self.step;

        // 1. requests
        let mut requests: Vec<PathRequest> = Vec::new();
        for seeker in self.seekers.iter_mut().filter(|s| s.active) {
            requests.push(seeker.plan_and_request(self.config.sample_interval, &self.cost)?);
        }
        if self.events.is_some() {
            for r in &requests {
                self.emit(Event::Request {
                    step: t,
                    seeker: r.seeker_id,
                    waypoints: r.waypoints.iter().map(|c| xy(*c)).collect(),
                    epsilon: r.epsilon,
                });
            }
        }

        // 2. supporter
        let target = match self.framework.exploration {
            Exploration::Utility => self.supporter.choose_target(&requests, &self.config.utility)?,
            Exploration::LawnMower => None,
        };
        let target_seeker = target.as_ref().map(|t| t.seeker_id);
        let decision = self.supporter.exploration_policy(target, &self.cost)?;
        self.supporter.advance();
        let window = self.supporter.sense_here(self.world, self.supporter_spec)?;
        let to = xy(self.supporter.position);
        self.emit(Event::SupporterMove { step: t, to, decision, target_seeker });

        // 3. communication
        let mut deliveries: Vec<Vec<(CellCoord, i32)>> = vec![Vec::new(); self.seekers.len()];
        if t.is_multiple_of(self.config.comm_period) {
            match self.framework.comm {
                CommMode::Ui => {}
                CommMode::Fi => self.broadcast_window(&window, &mut deliveries),
                CommMode::Milp => self.transmit_selected(&requests, &mut deliveries)?,
            }
        }
        if self.events.is_some() {
            for (i, cells) in deliveries.iter().enumerate() {
                if !cells.is_empty() {
                    let seeker = self.seekers[i].id;
                    self.emit(Event::Transmission { step: t, seeker, cells: cell_triples(cells) });
                }
            }
        }

        // 4. seekers move
        for (i, received) in deliveries.iter().enumerate() {
            if !self.seekers[i].active {
                continue;
            }
            let changed = self.seekers[i].merge_received(received)?;
            if changed {
                self.seekers[i].replan(&self.cost)?;
            }
            self.move_seeker(i)?;
        }
        Ok(())
    }

    fn broadcast_window(&mut self, window: &[(CellCoord, i32)], deliveries: &mut [Vec<(CellCoord, i32)>]) {
        let mut listeners = 0u64;
        for (i, seeker) in self.seekers.iter().enumerate() {
            if seeker.active {
                deliveries[i] = window.to_vec();
                listeners += 1;
            }
        }
        let w = window.len() as u64;
        let charged = match self.config.fi_accounting {
            FiAccounting::Broadcast => w,
            FiAccounting::PerSeeker => w * listeners,
        };
        self.total_data += charged;
        self.peak_step_delivery = self.peak_step_delivery.max(charged);
    }

    fn transmit_selected(&mut self, requests: &[PathRequest], deliveries: &mut [Vec<(CellCoord, i32)>]) -> Result<()> {
        for req in requests {
            let (_, upsilon) = filter_unexplored_waypoints(req, &self.supporter.belief);
            let belief = &self.supporter.belief;
            let ledger = self
                .supporter
                .ledgers
                .iter_mut()
                .find(|l| l.seeker_id == req.seeker_id)
                .ok_or_else(|| Error::Protocol(format!("no ledger for seeker {}", req.seeker_id)))?;
            refresh_ledger(ledger, &upsilon, belief, &self.config.utility);
        }
        let d: Vec<u64> = requests
            .iter()
            .map(|r| self.supporter.ledger(r.seeker_id).map_or(0, |l| l.informative_count() as u64))
            .collect();
        let e: Vec<f64> = requests.iter().map(|r| r.epsilon).collect();
        let budget_cells = self.config.bandwidth / self.config.cell_size;
        let problem = AllocationProblem::new(d, e, budget_cells, self.team_size)?;
        let grants = allocate(&problem)?;

        let mut delivered = 0u64;
        for (req, grant) in requests.iter().zip(&grants) {
            let b0 = self.config.cell_size;
            let belief = &self.supporter.belief;
            let ledger = self
                .supporter
                .ledgers
                .iter_mut()
                .find(|l| l.seeker_id == req.seeker_id)
                .expect("ledger checked above");
            let cells = select_cells(ledger, grant * b0, b0, belief)?;
            let idx = req.seeker_id - 1;
            for (c, _) in &cells {
                if !self.sent[idx].insert(*c) {
                    return Err(Error::ContractViolation(format!(
                        "cell {c} sent twice to seeker {}",
                        req.seeker_id
                    )));
                }
            }
            delivered += cells.len() as u64;
            deliveries[idx] = cells;
        }
        if delivered > budget_cells {
            return Err(Error::ContractViolation(format!(
                "step {} delivered {delivered} cells over a budget of {budget_cells}",
                self.step
            )));
        }
        self.total_data += delivered;
        self.peak_step_delivery = self.peak_step_delivery.max(delivered);
        Ok(())
    }

    fn move_seeker(&mut self, i: usize) -> Result<()> {
        let t = self.step;
        let limit = self.world.size() * self.world.size();
        for _ in 0..limit {
            let before = self.seekers[i].nav_cost;
            match self.seekers[i].step_move(self.world, self.seeker_spec, &self.cost)? {
                MoveOutcome::Moved(to) => {
                    let seeker = self.seekers[i].id;
                    let cost = self.seekers[i].nav_cost - before;
                    self.emit(Event::SeekerMove { step: t, seeker, to: xy(to), cost });
                    if !self.seekers[i].active {
                        self.seekers[i].finished_at = Some(t);
                        let nav_cost = self.seekers[i].nav_cost;
                        self.emit(Event::Finished { step: t, seeker, nav_cost });
                    }
                    return Ok(());
                }
                MoveOutcome::Refused(cell) => {
                    let seeker = self.seekers[i].id;
                    self.emit(Event::SeekerRefused { step: t, seeker, cell: xy(cell) });
                    self.seekers[i].replan(&self.cost)?;
                }
            }
        }
        Err(Error::ContractViolation(format!("seeker {} could not make a move", self.seekers[i].id)))
    }

    /// Step until every seeker is home or the step limit is reached.
    pub fn run(&mut self) -> Result<EpisodeMetrics> {
        while !self.is_done() && self.step < self.max_steps {
            self.step()?;
        }
        let completed = self.is_done();
        let total_data = self.total_data;
        self.emit(Event::End { steps: self.step, completed, total_data });
        Ok(self.metrics())
    }

    pub fn metrics(&self) -> EpisodeMetrics {
        let seekers: Vec<SeekerMetrics> = self
            .seekers
            .iter()
            .map(|s| SeekerMetrics {
                id: s.id,
                nav_cost: s.nav_cost,
                cells_received: s.cells_received,
                steps_to_goal: s.finished_at,
                reached_goal: !s.active,
            })
            .collect();
        EpisodeMetrics {
            framework: self.framework,
            bandwidth: self.framework.uses_bandwidth().then_some(self.config.bandwidth),
            seed: self.config.seed,
            steps: self.step,
            completed: self.is_done(),
            total_nav_cost: seekers.iter().map(|s| s.nav_cost).sum(),
            total_data: self.total_data,
            peak_step_delivery: self.peak_step_delivery,
            seekers,
        }
    }

    pub fn take_events(&mut self) -> Vec<Event> {
        self.events.take().unwrap_or_default()
    }
}

pub fn run_episode(
    world: &OccupancyGrid,
    scenario: &Scenario,
    config: &SimConfig,
    framework: Framework,
) -> Result<EpisodeMetrics> {
    Simulation::new(world, scenario, config, framework)?.run()
}

/// Like [`run_episode`], also returning the event log.
pub fn run_episode_logged(
    world: &OccupancyGrid,
    scenario: &Scenario,
    config: &SimConfig,
    framework: Framework,
) -> Result<(EpisodeMetrics, Vec<Event>)> {
    let mut sim = Simulation::new(world, scenario, config, framework)?.with_events();
    let metrics = sim.run()?;
    Ok((metrics, sim.take_events()))
}
