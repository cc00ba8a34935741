//! Interest and Data processing at a single node: gradient forwarding with
//! deferred (store-carry-forward) delivery, breadcrumb Data return and the
//! duplicate-count triggered Interest retransmission.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::MobCcnNode;
use crate::model::{ContentName, NodeId, Packet};
use crate::tables::{best_forwarder_except, ContentStore, Forwarder, Pit, PitOutcome};

/// Interests waiting for a contact with their chosen forwarder, at most one per
/// name.
#[derive(Debug, Clone, Default)]
pub struct PendingOutbox {
    held: BTreeMap<ContentName, Packet>,
}

impl PendingOutbox {
    pub fn hold(&mut self, name: ContentName, pkt: Packet) {
        self.held.entry(name).or_insert(pkt);
    }

    pub fn remove(&mut self, name: &ContentName) -> Option<Packet> {
        self.held.remove(name)
    }

    pub fn contains(&self, name: &ContentName) -> bool {
        self.held.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.held.len()
    }

    pub fn is_empty(&self) -> bool {
        self.held.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ContentName, &Packet)> {
        self.held.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetransmissionPolicy {
    pub enabled: bool,
    /// Arrival count (modulo) that re-sends the first Interest. At least 2.
    pub threshold: u32,
}

impl RetransmissionPolicy {
    pub fn new(enabled: bool, threshold: u32) -> Self {
        assert!(threshold >= 2, "retransmission threshold must be at least 2");
        RetransmissionPolicy { enabled, threshold }
    }

    pub fn disabled() -> Self {
        RetransmissionPolicy {
            enabled: false,
            threshold: 3,
        }
    }
}

impl Default for RetransmissionPolicy {
    fn default() -> Self {
        RetransmissionPolicy {
            enabled: true,
            threshold: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InterestAction {
    ReturnData { to: NodeId, data: Packet },
    Registered,
    Forwarded { to: NodeId },
    Held,
    Dropped,
}

fn choose(node: &MobCcnNode, name: ContentName, neighbors: &BTreeSet<NodeId>) -> Option<Forwarder> {
    let exclude = match node.pit.get(&name) {
        Some(e) if node.avoid_breadcrumb_faces => e.faces.as_slice(),
        _ => &[],
    };
    best_forwarder_except(&node.fib, &node.cnu, name.content_type, neighbors, exclude)
}

/// Routes an Interest whose PIT entry is fresh (or that is being retransmitted).
pub fn dispatch(node: &mut MobCcnNode, pkt: &Packet, neighbors: &BTreeSet<NodeId>) -> InterestAction {
    let Some(name) = pkt.name() else {
        return InterestAction::Dropped;
    };
    match choose(node, name, neighbors) {
        Some(f) if f.in_contact => {
            node.outbox.remove(&name);
            InterestAction::Forwarded { to: f.node }
        }
        Some(_) => {
            node.outbox.hold(name, pkt.clone());
            InterestAction::Held
        }
        None => InterestAction::Dropped,
    }
}

/// Interest received by `node` from `from` (`from == node.id` for a locally
/// generated request).
pub fn process_interest(
    node: &mut MobCcnNode,
    interest: &Packet,
    from: NodeId,
    neighbors: &BTreeSet<NodeId>,
) -> InterestAction {
    let Packet::Interest { name, .. } = interest else {
        return InterestAction::Dropped;
    };
    if let Some(data) = node.cs.lookup(*name) {
        return InterestAction::ReturnData { to: from, data };
    }
    match node.pit.register(*name, from, interest) {
        PitOutcome::FaceAdded => InterestAction::Registered,
        PitOutcome::NewEntry => dispatch(node, interest, neighbors),
    }
}

/// Re-evaluates every held Interest after a new contact. Returns the
/// Interests to send, paired with their next hop.
pub fn on_contact_begin_flush(node: &mut MobCcnNode, neighbors: &BTreeSet<NodeId>) -> Vec<(NodeId, Packet)> {
    let held: Vec<(ContentName, Packet)> = node.outbox.iter().map(|(n, p)| (*n, p.clone())).collect();
    let mut out = Vec::new();
    for (name, pkt) in held {
        if !node.pit.contains(&name) {
            node.outbox.remove(&name);
            continue;
        }
        if let Some(f) = choose(node, name, neighbors) {
            if f.in_contact {
                node.outbox.remove(&name);
                out.push((f.node, pkt));
            }
        }
    }
    out
}

/// Re-sends the first Interest for `name` when its arrival count hits a
/// multiple of the threshold and the entry is still pending.
pub fn maybe_retransmit(
    node: &mut MobCcnNode,
    name: ContentName,
    policy: &RetransmissionPolicy,
    neighbors: &BTreeSet<NodeId>,
) -> Option<InterestAction> {
    if !policy.enabled {
        return None;
    }
    let entry = node.pit.get(&name)?;
    if entry.arrivals % policy.threshold != 0 {
        return None;
    }
    let pkt = entry.first_interest.clone();
    Some(dispatch(node, &pkt, neighbors))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DataOutcome {
    /// The node itself requested this name.
    pub deliver_local: bool,
    /// Faces currently in contact: send immediately.
    pub send_now: Vec<NodeId>,
    /// Faces out of contact: queued until the next contact with them.
    pub queued_for: Vec<NodeId>,
    /// The content store gained a type it did not hold before.
    pub new_type: bool,
    pub unsolicited: bool,
}

/// Data received by `node`; `hops` is the number of transmissions so far.
pub fn process_data(
    node: &mut MobCcnNode,
    data: &Packet,
    hops: u32,
    caching: bool,
    neighbors: &BTreeSet<NodeId>,
) -> DataOutcome {
    let out = return_data(
        node.id,
        &mut node.cs,
        &mut node.pit,
        &mut node.data_out,
        data,
        hops,
        caching,
        neighbors,
    );
    if let (false, Some(name)) = (out.unsolicited, data.name()) {
        node.outbox.remove(&name);
    }
    out
}

/// Breadcrumb return shared by every PIT-based protocol: satisfies the PIT
/// entry, caches, and splits the faces into reachable now and queued.
#[allow(clippy::too_many_arguments)]
pub fn return_data(
    id: NodeId,
    cs: &mut ContentStore,
    pit: &mut Pit,
    data_out: &mut BTreeMap<NodeId, Vec<(Packet, u32)>>,
    data: &Packet,
    hops: u32,
    caching: bool,
    neighbors: &BTreeSet<NodeId>,
) -> DataOutcome {
    let Packet::Data { name, payload_bytes } = data else {
        return DataOutcome::default();
    };
    let Some(entry) = pit.satisfy(name) else {
        return DataOutcome {
            unsolicited: true,
            ..DataOutcome::default()
        };
    };
    let mut out = DataOutcome::default();
    let local = entry.faces.contains(&id);
    if caching || local {
        let had_type = cs.holds_type(name.content_type);
        cs.insert(*name, *payload_bytes);
        out.new_type = !had_type;
    }
    for face in entry.faces {
        if face == id {
            out.deliver_local = true;
        } else if neighbors.contains(&face) {
            out.send_now.push(face);
        } else {
            data_out.entry(face).or_default().push((data.clone(), hops));
            out.queued_for.push(face);
        }
    }
    out
}
