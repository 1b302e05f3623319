//! Supporter/seeker navigation under a communication budget.
//!
//! An aerial supporter explores a grid map and streams occupancy cells to
//! ground seekers. Seekers plan on partial beliefs and report which parts of
//! their plans are still unknown; the supporter ranks cells by value of
//! information and splits each step's bandwidth across the team.

pub mod allocator;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod events;
pub mod grid;
pub mod harness;
pub mod mapgen;
pub mod mapio;
pub mod planner;
pub mod seeker;
pub mod stats;
pub mod supporter;

pub use engine::{run_episode, run_episode_logged, EpisodeMetrics, Framework, Scenario, SimConfig};
pub use error::{Error, Result};
pub use grid::{CellCoord, OccupancyGrid, OccupancyParams};
