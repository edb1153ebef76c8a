use std::path::PathBuf;

use thiserror::Error;

use crate::safety::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid scenario: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("grid too large: {cells} cells exceeds cap of {cap}")]
    GridTooLarge { cells: u64, cap: u64 },

    #[error("point ({x}, {y}, {z}) lies outside the grid bounds")]
    OutOfBounds { x: f64, y: f64, z: f64 },

    #[error("path endpoint {0:?} is blocked")]
    BlockedEndpoint([usize; 3]),

    #[error("nothing to plan: {0}")]
    EmptyProblem(String),

    #[error("instance too large for exhaustive search: {goals} goals (max {max})")]
    TooLarge { goals: usize, max: usize },

    #[error("singular KKT system for {segments} segments (condition estimate {condition:e})")]
    SingularKkt { segments: usize, condition: f64 },

    #[error("dynamic limits still violated after {rounds} retiming rounds (speed {speed:.3} m/s, accel {accel:.3} m/s^2)")]
    RetimeInfeasible { rounds: usize, speed: f64, accel: f64 },

    #[error("replanning failed: {reason} ({violation:?})")]
    ReplanFailed { reason: String, violation: Box<Violation> },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// Innermost error, looking through stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}
