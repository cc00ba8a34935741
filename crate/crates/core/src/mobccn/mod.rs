//! Utility-gradient routing for content-centric retrieval.

pub mod forwarding;
mod network;
pub mod routing;

use std::collections::BTreeMap;

use crate::model::{ContentType, NodeId, Packet};
use crate::tables::{CnuTable, ContentStore, Fib, Pit};

pub use forwarding::{InterestAction, PendingOutbox, RetransmissionPolicy};
pub use network::{MobCcnConfig, MobCcnNetwork};
pub use routing::{IctEstimator, IctEstimatorKind, RoutingParams, UtilityMemory, UtilityTable};

/// Full per-node protocol state.
#[derive(Debug, Clone)]
pub struct MobCcnNode {
    pub id: NodeId,
    pub cs: ContentStore,
    pub pit: Pit,
    pub fib: Fib,
    pub cnu: CnuTable,
    pub ict_nodes: IctEstimator<NodeId>,
    pub ict_types: IctEstimator<ContentType>,
    pub utility: UtilityTable,
    pub outbox: PendingOutbox,
    /// Data waiting for the next contact with a breadcrumb face, with the
    /// number of transmissions it has already had.
    pub data_out: BTreeMap<NodeId, Vec<(Packet, u32)>>,
    pub malformed_hello_records: u64,
    /// Never pick a node already recorded as a breadcrumb face of the
    /// Interest as its next hop.
    pub avoid_breadcrumb_faces: bool,
}

impl MobCcnNode {
    pub fn new(id: NodeId, estimator: IctEstimatorKind) -> Self {
        MobCcnNode {
            id,
            cs: ContentStore::new(),
            pit: Pit::new(),
            fib: Fib::new(),
            cnu: CnuTable::new(),
            ict_nodes: IctEstimator::new(estimator),
            ict_types: IctEstimator::new(estimator),
            utility: UtilityTable::default(),
            outbox: PendingOutbox::default(),
            data_out: BTreeMap::new(),
            malformed_hello_records: 0,
            avoid_breadcrumb_faces: false,
        }
    }
}
