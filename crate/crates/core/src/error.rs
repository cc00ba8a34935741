use thiserror::Error;

use crate::model::{ContentName, NodeId};

#[derive(Error, Debug)]
pub enum SimError {
    #[error("config: {key}: {msg}")]
    Config { key: String, msg: String },

    #[error("trace line {line}: {msg}")]
    TraceFormat { line: usize, msg: String },

    #[error("workload line {line}: {msg}")]
    WorkloadFormat { line: usize, msg: String },

    #[error("contact alternation violated for pair ({a}, {b}) at t={time}")]
    Alternation { a: NodeId, b: NodeId, time: f64 },

    #[error("event at t={time} lies outside [0, {duration}]")]
    OutOfRange { time: f64, duration: f64 },

    #[error("node {0} is not part of this run")]
    UnknownNode(NodeId),

    #[error("delivery of {name} at node {node} has no matching request")]
    UnmatchedDelivery { node: NodeId, name: ContentName },

    #[error("unknown request id {0}")]
    UnknownRequest(u64),

    #[error("could not place {requested} requests for consumer {consumer} inside the request window")]
    WindowOverflow { consumer: NodeId, requested: usize },

    #[error("cache utilisation undefined for an empty initial cache")]
    EmptyInitialCache,

    #[error("{0}")]
    Runtime(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimError {
    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        SimError::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    /// Validation failures are reported with a distinct exit code by the CLI.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            SimError::Config { .. } | SimError::TraceFormat { .. } | SimError::WorkloadFormat { .. }
        )
    }
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
