use thiserror::Error;

use crate::geometry::Vec2;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point ({}, {}) lies outside the grid", .0.x, .0.y)]
    OutOfBounds(Vec2),

    #[error("no path between the requested cells")]
    NoPath,

    #[error("cells {from} and {to} are not adjacent")]
    NotAdjacent { from: usize, to: usize },

    #[error("frame time {t} does not follow previous frame time {previous}")]
    NonMonotonicTime { t: f64, previous: f64 },

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("episode log is empty")]
    EmptyLog,

    #[error("episode log has zero duration")]
    ZeroDuration,

    #[error("distance must be nonnegative, got {0}")]
    NegativeDistance(f64),

    #[error("report sets cover different scenarios")]
    MismatchedScenarios,

    #[error("unknown scenario kind `{0}`")]
    UnknownScenarioKind(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
