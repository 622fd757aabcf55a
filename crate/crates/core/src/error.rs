use thiserror::Error;

use crate::gf2::Unknown;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("schedule infeasible: segment {segment} misses its deadline at slot {slot}")]
    ScheduleInfeasible { segment: u32, slot: usize },

    #[error("inconsistent system: zero coefficient row with nonzero right-hand side")]
    InconsistentSystem,

    #[error("conflicting value injected for {0:?}")]
    ConflictingKnown(Unknown),

    #[error("coding plan mismatch: {0}")]
    PlanMismatch(String),

    #[error("coding plan generation exhausted after {0} redraws")]
    GenerationExhausted(usize),

    #[error("content is empty")]
    EmptyContent,

    #[error("degenerate Markov chain: both transition probabilities are zero")]
    DegenerateChain,

    #[error("malformed packet trace: {0}")]
    MalformedTrace(String),
}

pub type Result<T> = std::result::Result<T, Error>;
