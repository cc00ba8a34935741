//! Deterministic discrete-event simulator for content-centric data retrieval
//! over opportunistic networks.
//!
//! The crate bundles the protocol library (utility-gradient routing and three
//! epidemic-style baselines), a community mobility generator, the request
//! workload, the event engine and the metrics pipeline.

pub mod config;
pub mod engine;
pub mod epidemic;
pub mod error;
pub mod metrics;
pub mod mobccn;
pub mod mobility;
pub mod model;
pub mod rng;
pub mod scenario;
pub mod tables;
pub mod workload;

pub use config::{ProtocolKind, ScenarioConfig};
pub use error::{Result, SimError};
pub use metrics::{Aggregate, MetricsReport};
pub use model::{ContentName, ContentType, NodeId, Packet};
