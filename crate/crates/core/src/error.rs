use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("undeclared or invalid basis symbol: {0}")]
    Symbol(String),
    #[error("multiplicity error: {0}")]
    Multiplicity(String),
    #[error("unknown example graph {0:?}")]
    UnknownExample(String),
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("unknown exit {0:?}")]
    UnknownExit(String),
    #[error("graph is not row-finite (declared infinite emitter {0})")]
    NotRowFinite(String),
    #[error("graph is not strongly connected")]
    NotStronglyConnected,
    #[error("no loop found at {vertex} up to length {max_len}")]
    NoLoopFound { vertex: String, max_len: usize },
    #[error("interval width exceeds the request at the current precision: {0}")]
    PrecisionExhausted(String),
    #[error("undecided at current precision: {0}")]
    UndecidedAtPrecision(String),
    #[error("loop counts diverge: {0}")]
    Divergent(String),
    #[error("not monotone in beta: {0}")]
    NotMonotone(String),
    #[error("invalid bracket: {0}")]
    BracketInvalid(String),
    #[error("vertex outside the solved region: {0}")]
    OutOfRegion(String),
    #[error("stage pattern is not eventually periodic")]
    NotEventuallyPeriodic,
    #[error("hypothesis not satisfied: {0}")]
    InvalidHypothesis(String),
    #[error("vertex {0} is unreachable")]
    Unreachable(String),
    #[error("negative potential on edge {0}")]
    NegativePotential(String),
    #[error("numeric domain error: {0}")]
    Domain(String),
}
