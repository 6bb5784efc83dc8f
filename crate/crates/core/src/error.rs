use thiserror::Error;

use crate::topology::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("topology needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),

    #[error("graph is disconnected: no path between nodes {0} and {1}")]
    Disconnected(NodeId, NodeId),

    #[error("invalid edge ({0}, {1}): {2}")]
    InvalidEdge(NodeId, NodeId, &'static str),

    #[error("random geometric graph still disconnected after {0} attempts")]
    GeneratorExhausted(u32),

    #[error("edge list line {line}: {reason}")]
    EdgeListParse { line: usize, reason: String },

    #[error("rho_hat must be in [0, 1), got {0}")]
    RhoHatOutOfRange(f64),

    #[error("drift {rate} exceeds rho_hat {rho_hat}")]
    DriftOutOfRange { rate: f64, rho_hat: f64 },

    #[error("{0} must be positive, got {1}")]
    NonPositive(&'static str, f64),

    #[error("time {t} lies beyond the clock horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },

    #[error("time {0} is negative")]
    NegativeTime(f64),

    #[error("node {0} has not started")]
    NotStarted(NodeId),

    #[error("node {0} is already started")]
    AlreadyStarted(NodeId),

    #[error("node {node} has no neighbor {neighbor}")]
    NotANeighbor { node: NodeId, neighbor: NodeId },

    #[error("payload value {0} is negative")]
    NegativePayload(f64),

    #[error("hardware time {h_now} precedes rebase point {h_base}")]
    HardwareTimeRegressed { h_now: f64, h_base: f64 },

    #[error("scripted schedule on edge {from}->{to}: {reason}")]
    Schedule {
        from: NodeId,
        to: NodeId,
        reason: String,
    },

    #[error("invalid configuration: {}", .0.join("; "))]
    Invalid(Vec<String>),

    #[error("traces are not comparable: {0}")]
    Mismatch(String),

    #[error("{0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
