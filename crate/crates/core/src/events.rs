//! Line-delimited JSON event log for replay and debugging.
//!
//! One JSON object per line, discriminated by `"event"`. Coordinates are
//! `[x, y]` pairs and transmitted cells are `[x, y, occupancy]` triples.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::grid::CellCoord;
use crate::supporter::PolicyDecision;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Start {
        framework: String,
        size: usize,
        supporter: [usize; 2],
        starts: Vec<[usize; 2]>,
        goals: Vec<[usize; 2]>,
    },
    Request {
        step: u64,
        seeker: usize,
        waypoints: Vec<[usize; 2]>,
        epsilon: f64,
    },
    SupporterMove {
        step: u64,
        to: [usize; 2],
        decision: PolicyDecision,
        target_seeker: Option<usize>,
    },
    Transmission {
        step: u64,
        seeker: usize,
        cells: Vec<[i64; 3]>,
    },
    SeekerMove {
        step: u64,
        seeker: usize,
        to: [usize; 2],
        cost: f64,
    },
    SeekerRefused {
        step: u64,
        seeker: usize,
        cell: [usize; 2],
    },
    Finished {
        step: u64,
        seeker: usize,
        nav_cost: f64,
    },
    End {
        steps: u64,
        completed: bool,
        total_data: u64,
    },
}

pub fn xy(c: CellCoord) -> [usize; 2] {
    [c.x, c.y]
}

pub fn cell_triples(cells: &[(CellCoord, i32)]) -> Vec<[i64; 3]> {
    cells.iter().map(|(c, o)| [c.x as i64, c.y as i64, *o as i64]).collect()
}

pub fn write_jsonl<W: Write>(events: &[Event], mut out: W) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
