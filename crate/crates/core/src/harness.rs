//! Multi-trial experiments: paired trials, aggregation and trade-off tables.
//!
//! Every trial draws one world and one set of endpoints; all requested
//! frameworks run on exactly that pair. Frameworks without a bandwidth
//! parameter run once per trial, bandwidth-limited ones once per swept B.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::engine::CommMode;
use crate::engine::{run_episode, EpisodeMetrics, Exploration, Framework, Scenario, SimConfig};
use crate::error::{Error, Result};
use crate::grid::{CellCoord, OccupancyGrid};
use crate::mapgen::{generate_maze, generate_terrain};
use crate::mapio::load_map;
use crate::planner::{shortest_path, AgentKind, CostParams};
use crate::stats::{mean, std_dev};

/// Endpoint draws attempted per seeker before giving up.
pub const SAMPLING_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Terrain,
    Maze,
}

impl FromStr for MapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "terrain" => Ok(Self::Terrain),
            "maze" => Ok(Self::Maze),
            other => Err(Error::Config(format!("unknown map kind {other:?} (expected terrain or maze)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WorldSource {
    Generated { kind: MapKind, size: usize, seed: u64 },
    File(std::path::PathBuf),
}

impl WorldSource {
    /// Build the world, replacing the generator seed when `seed` is given.
    pub fn build(&self, config: &SimConfig, seed: Option<u64>) -> Result<OccupancyGrid> {
        match self {
            WorldSource::Generated { kind, size, seed: base } => {
                let s = seed.unwrap_or(*base);
                match kind {
                    MapKind::Terrain => generate_terrain(*size, s, &config.occupancy),
                    MapKind::Maze => generate_maze(*size, s, &config.occupancy),
                }
            }
            WorldSource::File(path) => load_map(path),
        }
    }
}

/// Draw `seekers` start/goal pairs uniformly over traversable cells, skipping
/// pairs with start = goal or no true path.
pub fn sample_scenario(world: &OccupancyGrid, seekers: usize, rng: &mut ChaCha8Rng) -> Result<Scenario> {
    let free: Vec<CellCoord> = world.coords().filter(|c| world.is_traversable(*c)).collect();
    if free.len() < 2 {
        return Err(Error::Sampling("fewer than two traversable cells".into()));
    }
    let params = CostParams::default();
    let mut starts = Vec::with_capacity(seekers);
    let mut goals = Vec::with_capacity(seekers);
    for i in 0..seekers {
        let mut found = None;
        for _ in 0..SAMPLING_ATTEMPTS {
            let s = *free.choose(rng).expect("nonempty");
            let g = *free.choose(rng).expect("nonempty");
            if s == g {
                continue;
            }
            if shortest_path(world, AgentKind::Seeker, s, g, &params)?.is_some() {
                found = Some((s, g));
                break;
            }
        }
        let (s, g) = found.ok_or_else(|| {
            Error::Sampling(format!("no feasible endpoints for seeker {} after {SAMPLING_ATTEMPTS} draws", i + 1))
        })?;
        starts.push(s);
        goals.push(g);
    }
    Ok(Scenario { starts, goals, supporter_start: None })
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub world: WorldSource,
    pub seekers: usize,
    pub trials: usize,
    pub seed_base: u64,
    pub bandwidths: Vec<u64>,
    pub frameworks: Vec<Framework>,
    /// Draw a fresh generated map per trial (seed = seed_base + n).
    pub randomize_map: bool,
    /// Fixed endpoints for every trial instead of sampling.
    pub endpoints: Option<Scenario>,
    pub config: SimConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trial count must be at least 1".into()));
        }
        if self.frameworks.is_empty() {
            return Err(Error::Config("framework list is empty".into()));
        }
        if self.frameworks.iter().any(|f| f.uses_bandwidth()) && self.bandwidths.is_empty() {
            return Err(Error::Config("bandwidth list is empty but a budgeted framework was requested".into()));
        }
        if self.bandwidths.contains(&0) {
            return Err(Error::Config("bandwidth values must be positive".into()));
        }
        if self.endpoints.is_none() && self.seekers == 0 {
            return Err(Error::Config("seeker count must be at least 1".into()));
        }
        if self.randomize_map && matches!(self.world, WorldSource::File(_)) {
            return Err(Error::Config("cannot randomize a map loaded from file".into()));
        }
        Ok(())
    }
}

/// One episode of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub framework: Framework,
    pub bandwidth: Option<u64>,
    pub steps: u64,
    pub completed: bool,
    pub total_nav_cost: f64,
    pub total_data: u64,
    pub peak_step_delivery: u64,
}

impl TrialRow {
    pub fn from_metrics(trial: usize, m: &EpisodeMetrics) -> Self {
        Self {
            trial,
            seed: m.seed,
            framework: m.framework,
            bandwidth: m.bandwidth,
            steps: m.steps,
            completed: m.completed,
            total_nav_cost: m.total_nav_cost,
            total_data: m.total_data,
            peak_step_delivery: m.peak_step_delivery,
        }
    }
}

fn run_one_trial(spec: &SweepSpec, trial: usize, shared_world: Option<&OccupancyGrid>) -> Result<Vec<TrialRow>> {
    let seed = spec.seed_base.wrapping_add(trial as u64);
    let owned;
    let world = match shared_world {
        Some(w) => w,
        None => {
            owned = spec.world.build(&spec.config, Some(seed))?;
            &owned
        }
    };
    let scenario = match &spec.endpoints {
        Some(s) => s.clone(),
        None => sample_scenario(world, spec.seekers, &mut ChaCha8Rng::seed_from_u64(seed))?,
    };
    let mut rows = Vec::new();
    for &fw in &spec.frameworks {
        let budgets: Vec<u64> = if fw.uses_bandwidth() { spec.bandwidths.clone() } else { vec![spec.config.bandwidth] };
        for b in budgets {
            let config = SimConfig { bandwidth: b, seed, ..spec.config.clone() };
            let metrics = run_episode(world, &scenario, &config, fw)?;
            rows.push(TrialRow::from_metrics(trial, &metrics));
        }
    }
    Ok(rows)
}

/// Run every trial. Trials execute in parallel on the current rayon pool;
/// rows come back ordered by trial, then framework, then bandwidth.
pub fn run_trials(spec: &SweepSpec) -> Result<Vec<TrialRow>> {
    spec.validate()?;
    let shared = if spec.randomize_map { None } else { Some(spec.world.build(&spec.config, None)?) };
    let per_trial: Vec<Result<Vec<TrialRow>>> =
        (0..spec.trials).into_par_iter().map(|n| run_one_trial(spec, n, shared.as_ref())).collect();
    let mut rows = Vec::new();
    for r in per_trial {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Per-(framework, bandwidth) aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameworkSummary {
    pub framework: Framework,
    pub bandwidth: Option<u64>,
    pub trials: usize,
    pub completed: usize,
    pub mean_data: f64,
    pub std_data: f64,
    pub mean_cost: f64,
    pub std_cost: f64,
    pub mean_steps: f64,
}

/// Group rows by (framework, bandwidth) in first-seen order and fold in row order.
pub fn summarize(rows: &[TrialRow]) -> Vec<FrameworkSummary> {
    let mut keys: Vec<(Framework, Option<u64>)> = Vec::new();
    for r in rows {
        let k = (r.framework, r.bandwidth);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(framework, bandwidth)| {
            let group: Vec<&TrialRow> =
                rows.iter().filter(|r| r.framework == framework && r.bandwidth == bandwidth).collect();
            let data: Vec<f64> = group.iter().map(|r| r.total_data as f64).collect();
            let cost: Vec<f64> = group.iter().map(|r| r.total_nav_cost).collect();
            let steps: Vec<f64> = group.iter().map(|r| r.steps as f64).collect();
            FrameworkSummary {
                framework,
                bandwidth,
                trials: group.len(),
                completed: group.iter().filter(|r| r.completed).count(),
                mean_data: mean(&data),
                std_data: std_dev(&data),
                mean_cost: mean(&cost),
                std_cost: std_dev(&cost),
                mean_steps: mean(&steps),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub framework: Framework,
    #[serde(rename = "B")]
    pub bandwidth: Option<u64>,
    pub norm_data: f64,
    pub norm_cost: f64,
    pub raw_data: f64,
    pub raw_cost: f64,
    pub trials: usize,
}

/// Normalize each aggregate: data by the FI mean (same exploration mode when
/// available) and cost by the UI mean.
pub fn tradeoff(summaries: &[FrameworkSummary]) -> Result<Vec<TradeoffPoint>> {
    let ui = summaries
        .iter()
        .find(|s| s.framework.comm == CommMode::Ui)
        .ok_or_else(|| Error::Normalization("no UI reference in the table".into()))?;
    let fi_for = |exploration: Exploration| -> Result<&FrameworkSummary> {
        summaries
            .iter()
            .find(|s| s.framework.comm == CommMode::Fi && s.framework.exploration == exploration)
            .or_else(|| summaries.iter().find(|s| s.framework.comm == CommMode::Fi))
            .ok_or_else(|| Error::Normalization("no FI reference in the table".into()))
    };
    if ui.mean_cost <= 0.0 {
        return Err(Error::Normalization("UI mean navigation cost is zero".into()));
    }
    summaries
        .iter()
        .map(|s| {
            let fi = fi_for(s.framework.exploration)?;
            let norm_data = if s.framework.comm == CommMode::Ui {
                0.0
            } else if fi.mean_data > 0.0 {
                s.mean_data / fi.mean_data
            } else {
                return Err(Error::Normalization("FI mean data is zero".into()));
            };
            Ok(TradeoffPoint {
                framework: s.framework,
                bandwidth: s.bandwidth,
                norm_data,
                norm_cost: s.mean_cost / ui.mean_cost,
                raw_data: s.mean_data,
                raw_cost: s.mean_cost,
                trials: s.trials,
            })
        })
        .collect()
}

fn write_csv<T: Serialize, W: Write>(items: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for item in items {
        w.serialize(item)?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv<T: for<'de> Deserialize<'de>, R: Read>(input: R) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

pub fn write_metrics_csv<W: Write>(rows: &[TrialRow], out: W) -> Result<()> {
    write_csv(rows, out)
}

pub fn read_metrics_csv<R: Read>(input: R) -> Result<Vec<TrialRow>> {
    read_csv(input)
}

pub fn write_tradeoff_csv<W: Write>(points: &[TradeoffPoint], out: W) -> Result<()> {
    write_csv(points, out)
}

pub fn read_tradeoff_csv<R: Read>(input: R) -> Result<Vec<TradeoffPoint>> {
    read_csv(input)
}

/// Writes `metrics.csv`, `tradeoff.csv` and `summary.json` into `dir`.
/// The trade-off table is skipped when a reference framework is missing.
pub fn write_sweep_outputs(rows: &[TrialRow], dir: &Path) -> Result<Vec<FrameworkSummary>> {
    std::fs::create_dir_all(dir)?;
    write_metrics_csv(rows, File::create(dir.join("metrics.csv"))?)?;
    let summaries = summarize(rows);
    match tradeoff(&summaries) {
        Ok(points) => write_tradeoff_csv(&points, File::create(dir.join("tradeoff.csv"))?)?,
        Err(Error::Normalization(_)) => {}
        Err(e) => return Err(e),
    }
    let mut f = File::create(dir.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut f, &summaries)?;
    f.write_all(b"\n")?;
    Ok(summaries)
}
