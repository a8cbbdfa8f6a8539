use thiserror::Error;

/// Errors produced by the planning toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ToroError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("instance has overlapping starts and goals; use the FVS pipeline instead")]
    OverlappingInstance,
    #[error("operation requires a labeled instance")]
    Unlabeled,
    #[error("size guard exceeded: {0}")]
    TooLarge(String),
    #[error("cycle enumeration cap of {0} exceeded")]
    CycleCapExceeded(usize),
    #[error("solver failure: {0}")]
    Solver(String),
    /// Time budget ran out; carries the best solution found, if any.
    #[error("solver timed out")]
    Timeout(Option<Vec<usize>>),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("generator budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, ToroError>;

impl From<std::io::Error> for ToroError {
    fn from(e: std::io::Error) -> Self {
        ToroError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for ToroError {
    fn from(e: serde_json::Error) -> Self {
        ToroError::Parse(e.to_string())
    }
}
