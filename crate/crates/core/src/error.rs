use crate::grid::CellCoord;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("coordinate {coord} is outside a {size}x{size} grid")]
    InvalidCoordinate { coord: CellCoord, size: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("map parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("map generation failed after {attempts} attempts")]
    GenerationFailed { attempts: u32 },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("planning fault: no path from {from} to {to} on the belief grid")]
    PlanningFault { from: CellCoord, to: CellCoord },

    #[error("utility is undefined for an empty waypoint set")]
    UndefinedUtility,

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("allocation infeasible: minimum grants sum to {min_total} > budget {budget}")]
    InfeasibleAllocation { min_total: u64, budget: u64 },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("normalization error: {0}")]
    Normalization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
