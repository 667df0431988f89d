use arm_core::{DataError, ModelError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("no consistent rule exists: row {row} matches every candidate condition but has the opposite label")]
    InfeasibleExplanation { row: usize },
    #[error("no rule with at most {cap} conditions is consistent")]
    InfeasibleSparsityCap { cap: usize },
    #[error("solver budget exhausted before any rule was found")]
    BudgetExhaustedNoIncumbent,
    #[error("the observation is an outlier; there is no rule characterizing it")]
    Outlier,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("explanation database mismatch: {0}")]
    DbMismatch(String),
    #[error("rule failed verification: {0}")]
    InvalidRule(String),
    #[error("malformed explanation database: {0}")]
    MalformedDb(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
}
