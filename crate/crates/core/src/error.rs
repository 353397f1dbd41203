use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("tree has no root node")]
    NoRoot,
    #[error("tree has more than one root: {0} and {1}")]
    MultipleRoots(String, String),
    #[error("duplicate node id {0}")]
    DuplicateNode(String),
    #[error("orphan node {node}: parent {parent} does not exist")]
    OrphanNode { node: String, parent: String },
    #[error("node {0} is not connected to the root")]
    Disconnected(String),
    #[error("time inconsistency at node {node}: {reason}")]
    TimeInconsistency { node: String, reason: String },
    #[error("leaf {node} at time {time} before horizon {horizon}")]
    LeafBeforeHorizon { node: String, time: usize, horizon: usize },
    #[error("invalid transition probability {prob} at {node}")]
    InvalidProbability { node: String, prob: f64 },
    #[error("probabilities sum to {sum} at {node}")]
    ProbabilitySum { node: String, sum: f64 },

    #[error("missing value at node {node} (level {level})")]
    MissingValue { node: String, level: usize },
    #[error("non-finite value at node {node}")]
    NonFinite { node: String },
    #[error("level mismatch: {0}")]
    LevelMismatch(String),
    #[error("payoff field missing U{player}({s},{t}) at node {node}")]
    MissingPayoff {
        player: u8,
        s: usize,
        t: usize,
        node: String,
    },
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("strategy class mismatch: {0}")]
    ClassMismatch(String),
    #[error("enumeration needs {count} profiles, above cap {cap}")]
    CapExceeded { count: u128, cap: u128 },
    #[error("solver defect: {0}")]
    Defect(String),

    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid game file: {0}")]
    Format(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}
