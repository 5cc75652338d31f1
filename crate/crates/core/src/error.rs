use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while building or validating a [`SystemConfig`](crate::model::SystemConfig).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config document does not parse: {0}")]
    Parse(String),
    #[error("missing required key `{0}`")]
    MissingField(&'static str),
    #[error("`{field}` = {value} is out of range: {bound}")]
    OutOfRange {
        field: &'static str,
        value: String,
        bound: &'static str,
    },
}

impl ConfigError {
    pub(crate) fn range(field: &'static str, value: impl ToString, bound: &'static str) -> Self {
        ConfigError::OutOfRange {
            field,
            value: value.to_string(),
            bound,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadioError {
    #[error("region has zero area")]
    ZeroArea,
    #[error("edge server {0} covers no user equipment")]
    EmptyCoverage(usize),
    #[error("task offloads a non-zero share over a zero-rate link")]
    UnreachableServer,
    #[error("task offloads a non-zero share with no resource units allocated")]
    NoAllocation,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuctionError {
    #[error("bidder {0} is not a winner of this outcome")]
    NotAWinner(usize),
    #[error("incentive factor {0} must lie in [0, 1)")]
    IncentiveFactor(f64),
    #[error("strategy grid must be non-empty and strictly increasing")]
    BadGrid,
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown scenario `{name}`; registered: {registered}")]
    UnknownScenario { name: String, registered: String },
    #[error("trace {path}: line {line}: {reason}")]
    TraceRow {
        path: PathBuf,
        line: u64,
        reason: String,
    },
    #[error("trace {0} holds no jobs")]
    EmptyTrace(PathBuf),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error(transparent)]
    Auction(#[from] AuctionError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
