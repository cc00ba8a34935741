//! Per-node CCN tables: Content Store, Pending Interest Table, the
//! utility-valued FIB and the Current Neighbours Utilities table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::model::{ContentName, ContentType, NodeId, Packet};

/// Unlimited-capacity data cache.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContentStore {
    entries: BTreeMap<ContentName, u32>,
}

impl ContentStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns true if the name was not present before. Idempotent.
    pub fn insert(&mut self, name: ContentName, payload_bytes: u32) -> bool {
        self.entries.insert(name, payload_bytes).is_none()
    }

    pub fn contains(&self, name: &ContentName) -> bool {
        self.entries.contains_key(name)
    }

    pub fn lookup(&self, name: ContentName) -> Option<Packet> {
        self.entries
            .get(&name)
            .map(|&payload_bytes| Packet::Data { name, payload_bytes })
    }

    pub fn holds_type(&self, t: ContentType) -> bool {
        self.entries
            .range(ContentName::new(t, 0)..=ContentName::new(t, u32::MAX))
            .next()
            .is_some()
    }

    pub fn types(&self) -> BTreeSet<ContentType> {
        self.entries.keys().map(|n| n.content_type).collect()
    }

    pub fn names(&self) -> impl Iterator<Item = &ContentName> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitEntry {
    pub name: ContentName,
    /// Breadcrumb faces in arrival order. A node's own id denotes the local
    /// application.
    pub faces: Vec<NodeId>,
    pub first_interest: Packet,
    pub arrivals: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PitOutcome {
    NewEntry,
    FaceAdded,
}

/// Pending Interest Table. Entries have no timeout; they leave the table only
/// when satisfied.
#[derive(Debug, Clone, Default)]
pub struct Pit {
    entries: BTreeMap<ContentName, PitEntry>,
}

impl Pit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: ContentName, from: NodeId, pkt: &Packet) -> PitOutcome {
        match self.entries.get_mut(&name) {
            Some(e) => {
                if !e.faces.contains(&from) {
                    e.faces.push(from);
                }
                e.arrivals += 1;
                PitOutcome::FaceAdded
            }
            None => {
                self.entries.insert(
                    name,
                    PitEntry {
                        name,
                        faces: vec![from],
                        first_interest: pkt.clone(),
                        arrivals: 1,
                    },
                );
                PitOutcome::NewEntry
            }
        }
    }

    pub fn get(&self, name: &ContentName) -> Option<&PitEntry> {
        self.entries.get(name)
    }

    /// Removes and returns the entry; a satisfied entry never stays in the table.
    pub fn satisfy(&mut self, name: &ContentName) -> Option<PitEntry> {
        self.entries.remove(name)
    }

    pub fn contains(&self, name: &ContentName) -> bool {
        self.entries.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PitEntry> {
        self.entries.values()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FibEntry {
    pub per_neighbor: BTreeMap<NodeId, f64>,
}

/// Utility-valued forwarding table, one entry per content type.
#[derive(Debug, Clone, Default)]
pub struct Fib {
    entries: BTreeMap<ContentType, FibEntry>,
}

impl Fib {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn find(&self, t: ContentType) -> Option<&FibEntry> {
        self.entries.get(&t)
    }

    /// Creates the (type, neighbor) slot with utility 0 if absent.
    pub fn create(&mut self, t: ContentType, q: NodeId) {
        self.entries.entry(t).or_default().per_neighbor.entry(q).or_insert(0.0);
    }

    pub fn update(&mut self, t: ContentType, q: NodeId, utility: f64) {
        debug_assert!(utility >= 0.0);
        self.entries.entry(t).or_default().per_neighbor.insert(q, utility);
    }

    pub fn get(&self, t: ContentType, q: NodeId) -> Option<f64> {
        self.entries.get(&t)?.per_neighbor.get(&q).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ContentType, &FibEntry)> {
        self.entries.iter()
    }
}

/// Utilities advertised by neighbours currently in contact.
#[derive(Debug, Clone, Default)]
pub struct CnuTable {
    entries: BTreeMap<(ContentType, NodeId), f64>,
}

impl CnuTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, t: ContentType, q: NodeId, utility: f64) {
        self.entries.insert((t, q), utility);
    }

    pub fn get(&self, t: ContentType, q: NodeId) -> Option<f64> {
        self.entries.get(&(t, q)).copied()
    }

    /// Drops every entry learned from `q`; called when the contact with `q` ends.
    pub fn remove_neighbor(&mut self, q: NodeId) {
        self.entries.retain(|(_, n), _| *n != q);
    }

    pub fn for_type(&self, t: ContentType) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.entries
            .range((t, NodeId(0))..=(t, NodeId(u32::MAX)))
            .map(|(&(_, q), &u)| (q, u))
    }

    pub fn neighbors(&self) -> BTreeSet<NodeId> {
        self.entries.keys().map(|(_, q)| *q).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(ContentType, NodeId), &f64)> {
        self.entries.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forwarder {
    pub node: NodeId,
    pub utility: f64,
    pub in_contact: bool,
}

/// Highest-utility forwarder for `t` over CNU entries of current neighbours and
/// all FIB entries. Equal utilities resolve to the smallest node id.
pub fn best_forwarder(
    fib: &Fib,
    cnu: &CnuTable,
    t: ContentType,
    current_neighbors: &BTreeSet<NodeId>,
) -> Option<Forwarder> {
    best_forwarder_except(fib, cnu, t, current_neighbors, &[])
}

/// [`best_forwarder`] with the nodes in `exclude` removed from both sources.
pub fn best_forwarder_except(
    fib: &Fib,
    cnu: &CnuTable,
    t: ContentType,
    current_neighbors: &BTreeSet<NodeId>,
    exclude: &[NodeId],
) -> Option<Forwarder> {
    let from_cnu = cnu.for_type(t).filter(|(q, _)| current_neighbors.contains(q));
    let from_fib = fib
        .find(t)
        .into_iter()
        .flat_map(|e| e.per_neighbor.iter().map(|(&q, &u)| (q, u)));
    let candidates = from_cnu.chain(from_fib).filter(|(q, _)| !exclude.contains(q));

    let mut best: Option<(NodeId, f64)> = None;
    for (q, u) in candidates {
        best = match best {
            None => Some((q, u)),
            Some((bq, bu)) if u > bu || (u == bu && q < bq) => Some((q, u)),
            keep => keep,
        };
    }
    best.map(|(node, utility)| Forwarder {
        node,
        utility,
        in_contact: current_neighbors.contains(&node),
    })
}

/// Tab-separated dump of every table entry, one per line, for golden files.
pub fn debug_dump(cs: &ContentStore, pit: &Pit, fib: &Fib, cnu: &CnuTable) -> String {
    let mut out = String::new();
    for n in cs.names() {
        let _ = writeln!(out, "CS\t{}\t{}", n.content_type, n.chunk);
    }
    for e in pit.iter() {
        let faces: Vec<String> = e.faces.iter().map(|f| f.to_string()).collect();
        let _ = writeln!(
            out,
            "PIT\t{}\t{}\t{}\t{}",
            e.name.content_type,
            e.name.chunk,
            faces.join(","),
            e.arrivals
        );
    }
    for (t, e) in fib.iter() {
        for (q, u) in &e.per_neighbor {
            let _ = writeln!(out, "FIB\t{t}\t{q}\t{u:e}");
        }
    }
    for ((t, q), u) in cnu.iter() {
        let _ = writeln!(out, "CNU\t{t}\t{q}\t{u:e}");
    }
    out
}
