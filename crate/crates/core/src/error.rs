use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    InvalidVertex { vertex: u64, n: u32 },

    #[error("time {time} outside horizon [0, {horizon}]")]
    TimeOutOfRange { time: f64, horizon: f64 },

    #[error("invalid mark sequence: {0}")]
    InvalidMarks(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported distribution: {0}")]
    UnsupportedDistribution(String),

    #[error("resource limit exceeded: {what} (limit {limit})")]
    ResourceLimit { what: String, limit: u64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}
