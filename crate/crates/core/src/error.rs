use thiserror::Error;

use crate::stopping::StageRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A function was called outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The precision goal violates a hypothesis of its scheme.
    #[error("infeasible goal: {inequality} does not hold ({detail})")]
    Infeasible {
        inequality: &'static str,
        detail: String,
    },

    #[error("plan kind mismatch: {0}")]
    PlanKind(String),

    #[error("stream exhausted after {drawn} observations at stage {stage}")]
    StreamExhausted { stage: usize, drawn: u64 },

    #[error("invalid observation {value} at position {position}")]
    InvalidObservation { position: u64, value: u64 },

    #[error("draw cap of {cap} observations exceeded at stage {stage}")]
    DrawCapExceeded { stage: usize, cap: u64 },

    #[error("stage cap of {cap} reached without stopping")]
    StageCapExceeded { cap: usize, trail: Vec<StageRecord> },

    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),

    #[error("tuning failed: {0}")]
    Tuning(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
