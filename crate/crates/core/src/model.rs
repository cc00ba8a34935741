//! Shared vocabulary: node identities, content names, packets and the byte-size
//! model used for traffic accounting.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Dense node identifier, `0..N` for a run of `N` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Content type identifier.
pub type ContentType = u32;

/// A retrievable unit: one chunk of one content type.
///
/// Ordering is lexicographic on `(content_type, chunk)`, which is what every
/// `BTreeMap` keyed by names relies on for deterministic iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContentName {
    pub content_type: ContentType,
    pub chunk: u32,
}

impl ContentName {
    pub const fn new(content_type: ContentType, chunk: u32) -> Self {
        ContentName { content_type, chunk }
    }
}

impl fmt::Display for ContentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.content_type, self.chunk)
    }
}

/// Exact-match naming: no prefix aggregation.
pub fn name_matches(interest_name: ContentName, data_name: ContentName) -> bool {
    interest_name == data_name
}

/// One advertised entry of a Hello packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HelloRecord {
    pub content_type: ContentType,
    /// Utility of the sender for this type, in 1/s.
    pub advertised_utility: f64,
    /// The sender's content store holds at least one chunk of this type.
    pub stored_locally: bool,
}

/// Protocol packets. Each variant carries exactly the fields of its kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Packet {
    Hello {
        records: Vec<HelloRecord>,
    },
    Interest {
        name: ContentName,
        /// Requesting consumer. Only read by metrics, never by forwarding.
        origin: NodeId,
        /// Per-request identifier; distinguishes Interest instances for the
        /// same name.
        nonce: u64,
    },
    Data {
        name: ContentName,
        payload_bytes: u32,
    },
}

impl Packet {
    pub fn kind(&self) -> PacketKind {
        match self {
            Packet::Hello { .. } => PacketKind::Hello,
            Packet::Interest { .. } => PacketKind::Interest,
            Packet::Data { .. } => PacketKind::Data,
        }
    }

    /// Name carried by Interest and Data packets.
    pub fn name(&self) -> Option<ContentName> {
        match self {
            Packet::Hello { .. } => None,
            Packet::Interest { name, .. } | Packet::Data { name, .. } => Some(*name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PacketKind {
    Hello,
    Interest,
    Data,
}

/// Byte sizes charged per packet. Header formats are not standardised for this
/// setting, so these are configurable constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeModel {
    pub hello_header: u64,
    /// content type (4 B) + utility (4 B) + stored flag (1 B)
    pub hello_record: u64,
    pub interest: u64,
    pub data_header: u64,
}

impl Default for SizeModel {
    fn default() -> Self {
        SizeModel {
            hello_header: 8,
            hello_record: 9,
            interest: 16,
            data_header: 16,
        }
    }
}

/// Default Data payload in bytes.
pub const DEFAULT_PAYLOAD_BYTES: u32 = 1024;

impl SizeModel {
    pub fn size_bytes(&self, p: &Packet) -> u64 {
        match p {
            Packet::Hello { records } => self.hello_header + self.hello_record * records.len() as u64,
            Packet::Interest { .. } => self.interest,
            Packet::Data { payload_bytes, .. } => self.data_header + u64::from(*payload_bytes),
        }
    }
}

/// Size of `p` under the default size model.
pub fn size_bytes(p: &Packet) -> u64 {
    SizeModel::default().size_bytes(p)
}
