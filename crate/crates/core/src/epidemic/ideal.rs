//! Flooding of both Interests and Data by anti-entropy. With unlimited
//! contact bandwidth every packet travels along the quickest time-respecting
//! path, which makes this the delay lower bound for the other protocols.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::engine::{Net, Protocol};
use crate::error::Result;
use crate::model::{ContentName, NodeId, Packet};
use crate::tables::ContentStore;
use crate::workload::{Placement, Request};

#[derive(Debug, Clone, Default)]
struct Node {
    cs: ContentStore,
    /// Transmissions the cached copy has had, per name.
    cs_hops: BTreeMap<ContentName, u32>,
    interests: BTreeMap<u64, Packet>,
    /// Flooded Data per Interest instance. Never used to answer Interests.
    data: BTreeMap<u64, (Packet, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Interest(u64),
    Data(u64),
    Content(ContentName),
}

struct Transfer {
    to: NodeId,
    key: Key,
    pkt: Packet,
    hops: u32,
}

/// With `caching` the content stores themselves are synchronised, so every
/// item spreads to every node it can reach. Without it Data is only created
/// in reply to an Interest and buffered per Interest instance.
#[derive(Debug, Clone)]
pub struct IdealEpidemic {
    nodes: Vec<Node>,
    caching: bool,
    payload_bytes: u32,
}

impl IdealEpidemic {
    pub fn new(n_nodes: usize, placement: &Placement, caching: bool) -> Self {
        let mut nodes = vec![Node::default(); n_nodes];
        for (p, names) in placement.holdings() {
            for &name in names {
                nodes[p.index()].cs.insert(name, placement.payload_bytes);
                nodes[p.index()].cs_hops.insert(name, 0);
            }
        }
        IdealEpidemic {
            nodes,
            caching,
            payload_bytes: placement.payload_bytes,
        }
    }

    fn has(&self, n: NodeId, key: &Key) -> bool {
        let node = &self.nodes[n.index()];
        match key {
            Key::Interest(k) => node.interests.contains_key(k),
            Key::Data(k) => node.data.contains_key(k),
            Key::Content(name) => node.cs.contains(name),
        }
    }

    fn items(&self, n: NodeId) -> Vec<(Key, Packet, u32)> {
        let node = &self.nodes[n.index()];
        let mut v: Vec<(Key, Packet, u32)> = node
            .interests
            .iter()
            .map(|(&k, p)| (Key::Interest(k), p.clone(), 0))
            .collect();
        if self.caching {
            for name in node.cs.names() {
                let pkt = Packet::Data {
                    name: *name,
                    payload_bytes: self.payload_bytes,
                };
                v.push((Key::Content(*name), pkt, node.cs_hops[name]));
            }
        } else {
            v.extend(node.data.iter().map(|(&k, (p, h))| (Key::Data(k), p.clone(), *h)));
        }
        v
    }

    /// Sends `x`'s items that `y` lacks and that are not already on their way.
    fn offer(
        &self,
        x: NodeId,
        y: NodeId,
        items: &[(Key, Packet, u32)],
        inflight: &mut BTreeSet<(NodeId, Key)>,
        q: &mut VecDeque<Transfer>,
        net: &mut Net,
    ) {
        for (key, pkt, hops) in items {
            if self.has(y, key) || !inflight.insert((y, key.clone())) {
                continue;
            }
            net.send(x, y, pkt);
            q.push_back(Transfer {
                to: y,
                key: key.clone(),
                pkt: pkt.clone(),
                hops: hops + 1,
            });
        }
    }

    fn spread(
        &self,
        x: NodeId,
        items: &[(Key, Packet, u32)],
        inflight: &mut BTreeSet<(NodeId, Key)>,
        q: &mut VecDeque<Transfer>,
        net: &mut Net,
    ) {
        let nbrs = net.neighbors;
        for &y in &nbrs[x.index()] {
            self.offer(x, y, items, inflight, q, net);
        }
    }

    /// Answers the stored Interests of `x` for `name` with fresh Data.
    fn answer(&mut self, x: NodeId, name: ContentName) -> Vec<(Key, Packet, u32)> {
        if self.caching {
            return Vec::new();
        }
        let payload_bytes = self.payload_bytes;
        let node = &mut self.nodes[x.index()];
        let mut fresh = Vec::new();
        for (&k, p) in &node.interests {
            if p.name() == Some(name) && !node.data.contains_key(&k) {
                fresh.push(k);
            }
        }
        fresh
            .into_iter()
            .map(|k| {
                let pkt = Packet::Data { name, payload_bytes };
                node.data.insert(k, (pkt.clone(), 0));
                (Key::Data(k), pkt, 0)
            })
            .collect()
    }

    /// Stores `name` at `x` as its own content and answers its Interests.
    fn store(&mut self, x: NodeId, name: ContentName, hops: u32) -> Vec<(Key, Packet, u32)> {
        let node = &mut self.nodes[x.index()];
        if node.cs.insert(name, self.payload_bytes) {
            node.cs_hops.insert(name, hops);
        }
        self.answer(x, name)
    }

    fn cascade(
        &mut self,
        mut q: VecDeque<Transfer>,
        mut inflight: BTreeSet<(NodeId, Key)>,
        net: &mut Net,
    ) -> Result<()> {
        while let Some(Transfer { to, key, pkt, hops }) = q.pop_front() {
            inflight.remove(&(to, key.clone()));
            if self.has(to, &key) {
                continue;
            }
            let mut new_items = vec![(key.clone(), pkt.clone(), hops)];
            match key {
                Key::Interest(k) => {
                    self.nodes[to.index()].interests.insert(k, pkt.clone());
                    if let Some(name) = pkt.name() {
                        if self.nodes[to.index()].cs.contains(&name) {
                            new_items.extend(self.answer(to, name));
                        }
                    }
                }
                Key::Data(k) => {
                    self.nodes[to.index()].data.insert(k, (pkt.clone(), hops));
                    let name = pkt.name().expect("data has a name");
                    if net.metrics.is_pending(to, name) {
                        net.deliver(to, name, hops)?;
                        new_items.extend(self.store(to, name, hops));
                    } else {
                        net.metrics.redundant_arrival(to, name);
                    }
                }
                Key::Content(name) => {
                    self.nodes[to.index()].cs.insert(name, self.payload_bytes);
                    self.nodes[to.index()].cs_hops.insert(name, hops);
                    if net.metrics.is_pending(to, name) {
                        net.deliver(to, name, hops)?;
                    }
                }
            }
            self.spread(to, &new_items, &mut inflight, &mut q, net);
        }
        Ok(())
    }
}

impl Protocol for IdealEpidemic {
    fn contact_up(&mut self, a: NodeId, b: NodeId, net: &mut Net) -> Result<()> {
        let mut q = VecDeque::new();
        let mut inflight = BTreeSet::new();
        let (ia, ib) = (self.items(a), self.items(b));
        self.offer(a, b, &ia, &mut inflight, &mut q, net);
        self.offer(b, a, &ib, &mut inflight, &mut q, net);
        self.cascade(q, inflight, net)
    }

    fn contact_down(&mut self, _a: NodeId, _b: NodeId, _net: &mut Net) -> Result<()> {
        Ok(())
    }

    fn request(&mut self, req: &Request, net: &mut Net) -> Result<()> {
        let c = req.consumer;
        let name = req.name;
        if self.nodes[c.index()].cs.contains(&name) {
            net.deliver(c, name, 0)?;
            return Ok(());
        }
        let buffered = self.nodes[c.index()]
            .data
            .values()
            .find(|(p, _)| p.name() == Some(name))
            .map(|(_, h)| *h);
        if let Some(h) = buffered {
            net.deliver(c, name, h)?;
            let items = self.store(c, name, h);
            let mut q = VecDeque::new();
            let mut inflight = BTreeSet::new();
            self.spread(c, &items, &mut inflight, &mut q, net);
            return self.cascade(q, inflight, net);
        }
        let pkt = Packet::Interest {
            name,
            origin: c,
            nonce: req.id,
        };
        self.nodes[c.index()].interests.insert(req.id, pkt.clone());
        let mut q = VecDeque::new();
        let mut inflight = BTreeSet::new();
        self.spread(c, &[(Key::Interest(req.id), pkt, 0)], &mut inflight, &mut q, net);
        self.cascade(q, inflight, net)
    }

    fn live_interest_copies(&self) -> BTreeMap<u64, usize> {
        BTreeMap::new()
    }

    fn cached_contents(&self) -> usize {
        self.nodes.iter().map(|n| n.cs.len()).sum()
    }
}
