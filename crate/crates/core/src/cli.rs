//! Command-line front end. [`main_with`] is the whole program; the binary
//! only forwards its arguments and environment.
//!
//! Every failure prints one line, `error[<kind>]: <message>`, to stderr and
//! exits with 2 (usage), 3 (configuration / infeasible setup), 4 (timeout)
//! or 1 (anything else).

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_coord, parse_coords, RunSettings};
use crate::engine::{run_episode, run_episode_logged, EpisodeMetrics, FiAccounting, Framework, Scenario};
use crate::error::Error;
use crate::events::write_jsonl;
use crate::grid::{CellCoord, OccupancyGrid};
use crate::harness::{run_trials, sample_scenario, write_sweep_outputs, MapKind, SweepSpec};
use crate::mapgen::{generate_maze, generate_terrain};
use crate::mapio::save_map;

/// Map seeds tried by `showcase` before giving up on the fixed endpoints.
pub const SHOWCASE_SEED_SEARCH: u64 = 1000;

#[derive(Debug, Parser)]
#[command(name = "voinav", version, about = "Bandwidth-limited supporter/seeker navigation simulator")]
struct Cli {
    /// Settings file with `key = value` lines
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a terrain or maze map file
    GenMap {
        #[arg(long)]
        kind: Option<MapKindArg>,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Run one episode and write its metrics as JSON
    Run(RunArgs),
    /// Run paired trials and write metrics, trade-off and summary files
    Sweep(SweepArgs),
    /// Run the fixed three-seeker scenario under all five frameworks
    Showcase(ShowcaseArgs),
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum MapKindArg {
    Terrain,
    Maze,
}

impl From<MapKindArg> for MapKind {
    fn from(k: MapKindArg) -> Self {
        match k {
            MapKindArg::Terrain => MapKind::Terrain,
            MapKindArg::Maze => MapKind::Maze,
        }
    }
}

#[derive(Debug, Args)]
struct WorldArgs {
    /// Load the world from a map file
    #[arg(long, value_name = "PATH")]
    map: Option<PathBuf>,
    /// Generator used when no map file is given
    #[arg(long)]
    kind: Option<MapKindArg>,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    map_seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long)]
    seeker_window: Option<usize>,
    #[arg(long)]
    supporter_window: Option<usize>,
    /// Waypoint sampling interval m
    #[arg(long)]
    sample_interval: Option<usize>,
    /// Communication period T
    #[arg(long)]
    comm_period: Option<u64>,
    /// Bandwidth units per transmitted cell
    #[arg(long)]
    cell_size: Option<u64>,
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long)]
    lawnmower_spacing: Option<usize>,
    #[arg(long, value_parser = parse_fi_accounting)]
    fi_accounting: Option<FiAccounting>,
    /// Override any settings key, e.g. `--set sigma=1.5` (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    world: WorldArgs,
    #[command(flatten)]
    sim: SimArgs,
    /// UI, FI0, FI1, MILP0 or MILP1
    #[arg(long, value_parser = parse_framework)]
    framework: Framework,
    #[arg(long)]
    seekers: Option<usize>,
    #[arg(long)]
    bandwidth: Option<u64>,
    /// Seeds endpoint sampling
    #[arg(long)]
    seed: Option<u64>,
    /// Start cells, e.g. `17,28;9,4`
    #[arg(long)]
    starts: Option<String>,
    #[arg(long)]
    goals: Option<String>,
    #[arg(long)]
    supporter_start: Option<String>,
    /// Metrics JSON destination (stdout when absent)
    #[arg(long, value_name = "PATH")]
    metrics_out: Option<PathBuf>,
    /// Event log destination (line-delimited JSON)
    #[arg(long, value_name = "PATH")]
    events_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    world: WorldArgs,
    #[command(flatten)]
    sim: SimArgs,
    /// Comma-separated framework labels
    #[arg(long, value_delimiter = ',', value_parser = parse_framework, required = true, num_args = 1..)]
    frameworks: Vec<Framework>,
    /// Comma-separated budgets for MILP frameworks
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    bandwidths: Option<Vec<u64>>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    #[arg(long)]
    seekers: Option<usize>,
    /// Generate a fresh map for every trial
    #[arg(long)]
    randomize_map: bool,
    /// Worker threads
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ShowcaseArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// Use this map instead of searching generated terrains
    #[arg(long, value_name = "PATH")]
    map: Option<PathBuf>,
    /// First terrain seed to try
    #[arg(long)]
    map_seed: Option<u64>,
    #[arg(long)]
    bandwidth: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

fn parse_framework(s: &str) -> Result<Framework, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_fi_accounting(s: &str) -> Result<FiAccounting, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failed invocation: exit code, reason tag and a one-line message.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, kind: "usage", message: message.into() }
    }

    fn timeout(message: impl Into<String>) -> Self {
        Self { code: 4, kind: "timeout", message: message.into() }
    }

    pub fn line(&self) -> String {
        format!("error[{}]: {}", self.kind, self.message.replace('\n', " "))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Config(_)
            | Error::Sampling(_)
            | Error::InvalidCoordinate { .. }
            | Error::InvalidParameter(_)
            | Error::Parse { .. }
            | Error::GenerationFailed { .. }
            | Error::Normalization(_) => (3, "config"),
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => (1, "io"),
            _ => (1, "internal"),
        };
        // the `[config]` tag already names the kind
        let message = match e {
            Error::Config(m) => m,
            other => other.to_string(),
        };
        Self { code, kind, message }
    }
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn main_with<I, T>(args: I, env: Vec<(String, String)>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            // clap's message spans several lines; keep the part before the usage block
            let text = e.to_string();
            let reason: Vec<&str> = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .filter(|l| !l.is_empty())
                .collect();
            let reason = if matches!(e.kind(), ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand | ErrorKind::MissingSubcommand) {
                "a subcommand is required (gen-map, run, sweep or showcase)".to_string()
            } else {
                reason.join(" ")
            };
            eprintln!("{}", CliError::usage(reason.trim_start_matches("error: ")).line());
            return 2;
        }
    };
    match execute(cli, env) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.line());
            e.code
        }
    }
}

fn base_settings(config: Option<&Path>, env: Vec<(String, String)>) -> Result<RunSettings, CliError> {
    let mut s = RunSettings::default();
    if let Some(p) = config {
        s.apply_file(p)?;
    }
    s.apply_env(env)?;
    Ok(s)
}

fn apply_world(s: &mut RunSettings, w: &WorldArgs) {
    if let Some(m) = &w.map {
        s.map = Some(m.clone());
    }
    if let Some(k) = w.kind {
        s.kind = k.into();
    }
    if let Some(n) = w.size {
        s.size = n;
    }
    if let Some(seed) = w.map_seed {
        s.map_seed = seed;
    }
}

fn apply_sim(s: &mut RunSettings, a: &SimArgs) -> Result<(), CliError> {
    let sim = &mut s.sim;
    if let Some(v) = a.seeker_window {
        sim.seeker_window = v;
    }
    if let Some(v) = a.supporter_window {
        sim.supporter_window = v;
    }
    if let Some(v) = a.sample_interval {
        sim.sample_interval = v;
    }
    if let Some(v) = a.comm_period {
        sim.comm_period = v;
    }
    if let Some(v) = a.cell_size {
        sim.cell_size = v;
    }
    if let Some(v) = a.max_steps {
        sim.max_steps = Some(v);
    }
    if let Some(v) = a.lawnmower_spacing {
        sim.lawnmower_spacing = Some(v);
    }
    if let Some(v) = a.fi_accounting {
        sim.fi_accounting = v;
    }
    for kv in &a.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        s.apply(k.trim(), v)?;
    }
    Ok(())
}

fn explicit_scenario(s: &RunSettings) -> Result<Option<Scenario>, CliError> {
    match (&s.starts, &s.goals) {
        (None, None) => Ok(None),
        (Some(starts), Some(goals)) => Ok(Some(Scenario {
            starts: starts.clone(),
            goals: goals.clone(),
            supporter_start: s.supporter_start,
        })),
        _ => Err(CliError::usage("starts and goals must be given together")),
    }
}

fn write_json<T: serde::Serialize>(value: &T, path: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::from(Error::Io(e)))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn execute(cli: Cli, env: Vec<(String, String)>) -> Result<(), CliError> {
    let mut settings = base_settings(cli.config.as_deref(), env)?;
    match cli.command {
        Command::GenMap { kind, size, seed, out } => {
            if let Some(k) = kind {
                settings.kind = k.into();
            }
            let n = size.unwrap_or(settings.size);
            let seed = seed.unwrap_or(settings.map_seed);
            let grid = match settings.kind {
                MapKind::Terrain => generate_terrain(n, seed, &settings.sim.occupancy)?,
                MapKind::Maze => generate_maze(n, seed, &settings.sim.occupancy)?,
            };
            save_map(&grid, &out)?;
            Ok(())
        }
        Command::Run(a) => cmd_run(settings, a),
        Command::Sweep(a) => cmd_sweep(settings, a),
        Command::Showcase(a) => cmd_showcase(settings, a),
    }
}

fn cmd_run(mut s: RunSettings, a: RunArgs) -> Result<(), CliError> {
    apply_world(&mut s, &a.world);
    apply_sim(&mut s, &a.sim)?;
    if let Some(v) = a.seekers {
        s.seekers = v;
    }
    if let Some(v) = a.bandwidth {
        s.sim.bandwidth = v;
    }
    if let Some(v) = a.seed {
        s.sim.seed = v;
    }
    if let Some(v) = &a.starts {
        s.starts = Some(parse_coords(v)?);
    }
    if let Some(v) = &a.goals {
        s.goals = Some(parse_coords(v)?);
    }
    if let Some(v) = &a.supporter_start {
        s.supporter_start = Some(parse_coord(v)?);
    }
    let world = s.world_source().build(&s.sim, None)?;
    let scenario = match explicit_scenario(&s)? {
        Some(sc) => sc,
        None => {
            let mut sc = sample_scenario(&world, s.seekers, &mut ChaCha8Rng::seed_from_u64(s.sim.seed))?;
            sc.supporter_start = s.supporter_start;
            sc
        }
    };
    let metrics = match &a.events_out {
        Some(path) => {
            let (m, events) = run_episode_logged(&world, &scenario, &s.sim, a.framework)?;
            write_jsonl(&events, std::io::BufWriter::new(File::create(path).map_err(Error::from)?))?;
            m
        }
        None => run_episode(&world, &scenario, &s.sim, a.framework)?,
    };
    write_json(&metrics, a.metrics_out.as_deref())?;
    if !metrics.completed {
        return Err(CliError::timeout(format!(
            "{} seekers still active after {} steps",
            metrics.seekers.iter().filter(|m| !m.reached_goal).count(),
            metrics.steps
        )));
    }
    Ok(())
}

fn cmd_sweep(mut s: RunSettings, a: SweepArgs) -> Result<(), CliError> {
    apply_world(&mut s, &a.world);
    apply_sim(&mut s, &a.sim)?;
    if let Some(v) = a.seekers {
        s.seekers = v;
    }
    if a.frameworks.is_empty() {
        return Err(CliError::usage("--frameworks must name at least one framework"));
    }
    let bandwidths = match a.bandwidths {
        Some(b) if b.is_empty() => return Err(CliError::usage("--bandwidths is empty")),
        Some(b) => b,
        None => vec![s.sim.bandwidth],
    };
    let spec = SweepSpec {
        world: s.world_source(),
        seekers: s.seekers,
        trials: a.trials,
        seed_base: a.seed_base,
        bandwidths,
        frameworks: a.frameworks,
        randomize_map: a.randomize_map,
        endpoints: explicit_scenario(&s)?,
        config: s.sim.clone(),
    };
    let rows = match a.jobs {
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j as usize)
                .build()
                .map_err(|e| CliError { code: 1, kind: "internal", message: e.to_string() })?;
            pool.install(|| run_trials(&spec))?
        }
        None => run_trials(&spec)?,
    };
    let summaries = write_sweep_outputs(&rows, &a.out_dir)?;
    for sm in &summaries {
        let b = sm.bandwidth.map(|b| b.to_string()).unwrap_or_else(|| "-".into());
        println!(
            "{:<6} B={:<4} cost {:>10.1} ± {:<8.1} data {:>9.1} ± {:<8.1} completed {}/{}",
            sm.framework.label(),
            b,
            sm.mean_cost,
            sm.std_cost,
            sm.mean_data,
            sm.std_data,
            sm.completed,
            sm.trials
        );
    }
    Ok(())
}

/// Endpoints of the three-seeker showcase on a 32×32 terrain.
pub fn showcase_scenario() -> Scenario {
    let c = CellCoord::new;
    Scenario {
        starts: vec![c(17, 28), c(9, 4), c(27, 1)],
        goals: vec![c(20, 13), c(27, 31), c(11, 27)],
        supporter_start: Some(c(8, 8)),
    }
}

/// First generated terrain, from `first_seed` on, on which every showcase
/// seeker has a feasible path.
pub fn showcase_world(first_seed: u64, s: &RunSettings) -> Result<(u64, OccupancyGrid), Error> {
    let scenario = showcase_scenario();
    for seed in first_seed..first_seed.saturating_add(SHOWCASE_SEED_SEARCH) {
        let world = generate_terrain(32, seed, &s.sim.occupancy)?;
        if scenario.validate(&world).is_ok() {
            return Ok((seed, world));
        }
    }
    Err(Error::Config(format!(
        "no terrain seed in {first_seed}..{} admits the showcase endpoints",
        first_seed.saturating_add(SHOWCASE_SEED_SEARCH)
    )))
}

fn cmd_showcase(mut s: RunSettings, a: ShowcaseArgs) -> Result<(), CliError> {
    apply_sim(&mut s, &a.sim)?;
    s.sim.bandwidth = a.bandwidth.unwrap_or(27);
    let scenario = showcase_scenario();
    let (map_seed, world) = match a.map.as_ref().or(s.map.as_ref()) {
        Some(p) => (None, crate::mapio::load_map(p)?),
        None => {
            let (seed, w) = showcase_world(a.map_seed.unwrap_or(s.map_seed), &s)?;
            (Some(seed), w)
        }
    };
    std::fs::create_dir_all(&a.out_dir).map_err(Error::from)?;
    save_map(&world, a.out_dir.join("map.txt"))?;
    let mut table = csv::Writer::from_path(a.out_dir.join("showcase.csv")).map_err(Error::from)?;
    table
        .write_record(["framework", "seeker", "nav_cost", "cells_received", "steps_to_goal", "total_data"])
        .map_err(Error::from)?;
    if let Some(seed) = map_seed {
        println!("terrain seed {seed}");
    }
    let mut timed_out = Vec::new();
    for fw in [Framework::UI, Framework::FI1, Framework::MILP1, Framework::FI0, Framework::MILP0] {
        let (m, events): (EpisodeMetrics, _) = run_episode_logged(&world, &scenario, &s.sim, fw)?;
        let label = fw.label();
        write_json(&m, Some(&a.out_dir.join(format!("{label}.json"))))?;
        write_jsonl(&events, std::io::BufWriter::new(File::create(a.out_dir.join(format!("{label}.events.jsonl"))).map_err(Error::from)?))?;
        for sk in &m.seekers {
            table
                .write_record([
                    label.to_string(),
                    sk.id.to_string(),
                    sk.nav_cost.to_string(),
                    sk.cells_received.to_string(),
                    sk.steps_to_goal.map(|v| v.to_string()).unwrap_or_default(),
                    m.total_data.to_string(),
                ])
                .map_err(Error::from)?;
        }
        println!("{label:<6} cost {:>9.1} data {:>7} steps {}", m.total_nav_cost, m.total_data, m.steps);
        if !m.completed {
            timed_out.push(label);
        }
    }
    table.flush().map_err(Error::from)?;
    std::io::stdout().flush().ok();
    if !timed_out.is_empty() {
        return Err(CliError::timeout(format!("episodes did not finish: {}", timed_out.join(", "))));
    }
    Ok(())
}
