use thiserror::Error;

use crate::graph::EdgeId;

/// Errors raised when constructing or querying instances, models and solvers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("graph must have at least one node")]
    EmptyGraph,
    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{u}, {v}}}")]
    DuplicateEdge { u: usize, v: usize },
    #[error("negative cost {cost} on edge {{{u}, {v}}}")]
    NegativeCost { u: usize, v: usize, cost: i64 },
    #[error("invalid edge id {0}")]
    InvalidEdge(EdgeId),
    #[error("edge {0} conflicts with itself")]
    SelfConflict(EdgeId),
    #[error("edge {0} is both forced in and forced out")]
    OverlappingForcedSets(EdgeId),
    #[error("root node {root} out of range for graph with {n} nodes")]
    RootOutOfRange { root: usize, n: usize },
    #[error("instance has {m} edges, brute force is limited to {limit}")]
    TooManyEdges { m: usize, limit: usize },
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

/// A parse failure, tagged with the 1-based line it occurred on.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
