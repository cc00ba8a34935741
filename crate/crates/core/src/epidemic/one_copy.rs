//! Single-copy random walk of Interests with breadcrumb Data return.
//!
//! A carried Interest is offered once to each neighbour per contact, in
//! ascending id order; each offer succeeds with probability `forward_prob`
//! and hands the only copy over. Without retransmission a node that already
//! has a pending entry for the name absorbs further Interests for it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;

use crate::engine::{Net, Protocol};
use crate::error::Result;
use crate::mobccn::forwarding::return_data;
use crate::model::{NodeId, Packet};
use crate::tables::{ContentStore, Pit};
use crate::workload::{Placement, Request};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneCopyConfig {
    pub forward_prob: f64,
    /// Without it, Interests for a name already pending at a node are
    /// absorbed there.
    pub retransmission: bool,
    pub caching: bool,
}

#[derive(Debug, Clone)]
struct Carried {
    pkt: Packet,
    /// Neighbours already offered the copy during their current contact.
    offered: BTreeSet<NodeId>,
    /// Nodes the copy visited at `instant`; never revisited in the same
    /// instant.
    instant: f64,
    visited: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, Default)]
struct Node {
    cs: ContentStore,
    pit: Pit,
    carried: BTreeMap<u64, Carried>,
    data_out: BTreeMap<NodeId, Vec<(Packet, u32)>>,
}

enum Msg {
    Interest(Carried),
    Data(Packet, u32),
}

struct Transfer {
    from: NodeId,
    to: NodeId,
    msg: Msg,
}

#[derive(Debug, Clone)]
pub struct OneCopyEpidemic {
    nodes: Vec<Node>,
    cfg: OneCopyConfig,
}

impl OneCopyEpidemic {
    pub fn new(n_nodes: usize, placement: &Placement, cfg: OneCopyConfig) -> Self {
        let mut nodes = vec![Node::default(); n_nodes];
        for (p, names) in placement.holdings() {
            for &name in names {
                nodes[p.index()].cs.insert(name, placement.payload_bytes);
            }
        }
        OneCopyEpidemic { nodes, cfg }
    }

    /// Offers copy `nonce` held by `x` to `candidates` in order until one
    /// coin succeeds.
    fn offer(&mut self, x: NodeId, nonce: u64, candidates: &[NodeId], q: &mut VecDeque<Transfer>, net: &mut Net) {
        for &y in candidates {
            let Some(c) = self.nodes[x.index()].carried.get_mut(&nonce) else {
                return;
            };
            let fresh_instant = c.instant != net.now;
            if c.offered.contains(&y) || (!fresh_instant && c.visited.contains(&y)) {
                continue;
            }
            c.offered.insert(y);
            if net.rng.random::<f64>() < self.cfg.forward_prob {
                let mut c = self.nodes[x.index()].carried.remove(&nonce).expect("present");
                if fresh_instant {
                    c.instant = net.now;
                    c.visited = BTreeSet::from([x]);
                }
                net.send(x, y, &c.pkt);
                q.push_back(Transfer {
                    from: x,
                    to: y,
                    msg: Msg::Interest(c),
                });
                return;
            }
        }
    }

    fn send_data(&self, from: NodeId, to: NodeId, pkt: Packet, hops: u32, q: &mut VecDeque<Transfer>, net: &mut Net) {
        net.send(from, to, &pkt);
        q.push_back(Transfer {
            from,
            to,
            msg: Msg::Data(pkt, hops),
        });
    }

    fn on_interest(&mut self, from: NodeId, to: NodeId, mut c: Carried, q: &mut VecDeque<Transfer>, net: &mut Net) {
        let Packet::Interest { name, nonce, .. } = c.pkt else {
            return;
        };
        let node = &mut self.nodes[to.index()];
        if let Some(data) = node.cs.lookup(name) {
            self.send_data(to, from, data, 1, q, net);
            return;
        }
        let absorbed = !self.cfg.retransmission && node.pit.contains(&name);
        node.pit.register(name, from, &c.pkt);
        if absorbed {
            return;
        }
        c.offered = BTreeSet::from([from]);
        c.visited.insert(to);
        node.carried.insert(nonce, c);
        let candidates: Vec<NodeId> = net.neighbors[to.index()].iter().copied().collect();
        self.offer(to, nonce, &candidates, q, net);
    }

    fn on_data(&mut self, to: NodeId, pkt: Packet, hops: u32, q: &mut VecDeque<Transfer>, net: &mut Net) -> Result<()> {
        let Some(name) = pkt.name() else { return Ok(()) };
        let node = &mut self.nodes[to.index()];
        let out = return_data(
            to,
            &mut node.cs,
            &mut node.pit,
            &mut node.data_out,
            &pkt,
            hops,
            self.cfg.caching,
            &net.neighbors[to.index()],
        );
        if out.unsolicited {
            net.metrics.redundant_arrival(to, name);
            return Ok(());
        }
        node.carried.retain(|_, c| c.pkt.name() != Some(name));
        if out.deliver_local {
            net.deliver(to, name, hops)?;
        }
        for face in out.send_now {
            self.send_data(to, face, pkt.clone(), hops + 1, q, net);
        }
        Ok(())
    }

    fn cascade(&mut self, mut q: VecDeque<Transfer>, net: &mut Net) -> Result<()> {
        while let Some(Transfer { from, to, msg }) = q.pop_front() {
            match msg {
                Msg::Interest(c) => self.on_interest(from, to, c, &mut q, net),
                Msg::Data(pkt, hops) => self.on_data(to, pkt, hops, &mut q, net)?,
            }
        }
        Ok(())
    }
}

impl Protocol for OneCopyEpidemic {
    fn contact_up(&mut self, a: NodeId, b: NodeId, net: &mut Net) -> Result<()> {
        let mut q = VecDeque::new();
        for (x, y) in [(a, b), (b, a)] {
            let queued = self.nodes[x.index()].data_out.remove(&y).unwrap_or_default();
            for (pkt, hops) in queued {
                self.send_data(x, y, pkt, hops + 1, &mut q, net);
            }
        }
        for (x, y) in [(a, b), (b, a)] {
            let nonces: Vec<u64> = self.nodes[x.index()].carried.keys().copied().collect();
            for nonce in nonces {
                self.offer(x, nonce, &[y], &mut q, net);
            }
        }
        self.cascade(q, net)
    }

    fn contact_down(&mut self, a: NodeId, b: NodeId, _net: &mut Net) -> Result<()> {
        for (x, y) in [(a, b), (b, a)] {
            for c in self.nodes[x.index()].carried.values_mut() {
                c.offered.remove(&y);
            }
        }
        Ok(())
    }

    fn request(&mut self, req: &Request, net: &mut Net) -> Result<()> {
        let c = req.consumer;
        let node = &mut self.nodes[c.index()];
        if node.cs.contains(&req.name) {
            net.deliver(c, req.name, 0)?;
            return Ok(());
        }
        let pkt = Packet::Interest {
            name: req.name,
            origin: c,
            nonce: req.id,
        };
        let absorbed = !self.cfg.retransmission && node.pit.contains(&req.name);
        node.pit.register(req.name, c, &pkt);
        if absorbed {
            return Ok(());
        }
        node.carried.insert(
            req.id,
            Carried {
                pkt,
                offered: BTreeSet::new(),
                instant: net.now,
                visited: BTreeSet::from([c]),
            },
        );
        let mut q = VecDeque::new();
        let candidates: Vec<NodeId> = net.neighbors[c.index()].iter().copied().collect();
        self.offer(c, req.id, &candidates, &mut q, net);
        self.cascade(q, net)
    }

    fn live_interest_copies(&self) -> BTreeMap<u64, usize> {
        let mut m = BTreeMap::new();
        for n in &self.nodes {
            for &nonce in n.carried.keys() {
                *m.entry(nonce).or_insert(0) += 1;
            }
        }
        m
    }

    fn cached_contents(&self) -> usize {
        self.nodes.iter().map(|n| n.cs.len()).sum()
    }
}
