use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("node label {label} out of range for {n} nodes")]
    NodeOutOfRange { label: usize, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid preference vector: {0}")]
    InvalidPreference(String),
    #[error("singular linear system")]
    SingularSystem,
    #[error("{what} too large: {got} exceeds limit {limit}")]
    TooLarge {
        what: &'static str,
        got: usize,
        limit: usize,
    },
    #[error("state index {index} out of range for node {node} with {count} states")]
    IndexOutOfRange {
        node: usize,
        index: usize,
        count: usize,
    },
    #[error("node {0} is isolated; its empty-state mass is undefined")]
    IsolatedNode(usize),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("state tables do not match the graph: {0}")]
    TableMismatch(String),
    #[error("empty state vector trace")]
    EmptyTrace,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
