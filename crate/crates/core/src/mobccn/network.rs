use std::collections::{BTreeMap, VecDeque};

use super::forwarding::{
    maybe_retransmit, on_contact_begin_flush, process_data, process_interest, InterestAction, RetransmissionPolicy,
};
use super::routing::{build_hello, process_hello, record_encounter, RoutingParams};
use super::MobCcnNode;
use crate::engine::{Net, Protocol};
use crate::error::Result;
use crate::model::{NodeId, Packet};
use crate::workload::{Placement, Request};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobCcnConfig {
    pub routing: RoutingParams,
    pub retransmission: RetransmissionPolicy,
    pub caching: bool,
    /// Direct utility of the initial content holders for their own types.
    pub initial_utility: f64,
    pub avoid_breadcrumb_faces: bool,
}

impl Default for MobCcnConfig {
    fn default() -> Self {
        let routing = RoutingParams::default();
        MobCcnConfig {
            routing,
            retransmission: RetransmissionPolicy::default(),
            caching: false,
            initial_utility: routing.u_cap / 2.0,
            avoid_breadcrumb_faces: false,
        }
    }
}

enum Msg {
    Interest(Packet),
    /// Data with the number of transmissions including the current one.
    Data(Packet, u32),
}

struct Transfer {
    from: NodeId,
    to: NodeId,
    msg: Msg,
}

/// Every node of a run speaking the utility-gradient protocol.
#[derive(Debug, Clone)]
pub struct MobCcnNetwork {
    nodes: Vec<MobCcnNode>,
    cfg: MobCcnConfig,
}

impl MobCcnNetwork {
    pub fn new(n_nodes: usize, placement: &Placement, cfg: MobCcnConfig) -> Self {
        let mut nodes: Vec<MobCcnNode> = (0..n_nodes as u32)
            .map(|i| {
                let mut n = MobCcnNode::new(NodeId(i), cfg.routing.estimator);
                n.avoid_breadcrumb_faces = cfg.avoid_breadcrumb_faces;
                n
            })
            .collect();
        for (node, names) in placement.holdings() {
            let n = &mut nodes[node.index()];
            for name in names {
                n.cs.insert(*name, placement.payload_bytes);
            }
            for t in n.cs.types() {
                n.utility.set_direct(t, cfg.initial_utility);
            }
        }
        MobCcnNetwork { nodes, cfg }
    }

    pub fn node(&self, id: NodeId) -> &MobCcnNode {
        &self.nodes[id.index()]
    }

    pub fn nodes(&self) -> &[MobCcnNode] {
        &self.nodes
    }

    fn send_interest(&self, from: NodeId, to: NodeId, pkt: Packet, q: &mut VecDeque<Transfer>, net: &mut Net) {
        net.send(from, to, &pkt);
        q.push_back(Transfer {
            from,
            to,
            msg: Msg::Interest(pkt),
        });
    }

    fn send_data(&self, from: NodeId, to: NodeId, pkt: Packet, hops: u32, q: &mut VecDeque<Transfer>, net: &mut Net) {
        net.send(from, to, &pkt);
        q.push_back(Transfer {
            from,
            to,
            msg: Msg::Data(pkt, hops),
        });
    }

    /// Carries out the outcome of Interest processing at `at`.
    fn apply(
        &mut self,
        at: NodeId,
        pkt: Packet,
        action: InterestAction,
        q: &mut VecDeque<Transfer>,
        net: &mut Net,
    ) -> Result<()> {
        match action {
            InterestAction::ReturnData { to, data } if to == at => {
                if let Some(name) = data.name() {
                    net.deliver(at, name, 0)?;
                }
            }
            InterestAction::ReturnData { to, data } => self.send_data(at, to, data, 1, q, net),
            InterestAction::Forwarded { to } => self.send_interest(at, to, pkt, q, net),
            InterestAction::Registered => {
                let Some(name) = pkt.name() else { return Ok(()) };
                let nb = &net.neighbors[at.index()];
                let node = &mut self.nodes[at.index()];
                if let Some(InterestAction::Forwarded { to }) =
                    maybe_retransmit(node, name, &self.cfg.retransmission, nb)
                {
                    let first = node.pit.get(&name).map(|e| e.first_interest.clone()).unwrap_or(pkt);
                    self.send_interest(at, to, first, q, net);
                }
            }
            InterestAction::Held | InterestAction::Dropped => {}
        }
        Ok(())
    }

    /// New Hello from `x` to all its current neighbours after its content
    /// store gained a type. Receivers re-evaluate their held Interests.
    fn advertise(&mut self, x: NodeId, q: &mut VecDeque<Transfer>, net: &mut Net) {
        let hello = build_hello(&self.nodes[x.index()]);
        let nbrs = net.neighbors;
        for &y in &nbrs[x.index()] {
            net.send(x, y, &hello);
            process_hello(&mut self.nodes[y.index()], &hello, x, &self.cfg.routing);
        }
        for &y in &nbrs[x.index()] {
            let out = on_contact_begin_flush(&mut self.nodes[y.index()], &nbrs[y.index()]);
            for (to, pkt) in out {
                self.send_interest(y, to, pkt, q, net);
            }
        }
    }

    fn cascade(&mut self, mut q: VecDeque<Transfer>, net: &mut Net) -> Result<()> {
        while let Some(Transfer { from, to, msg }) = q.pop_front() {
            match msg {
                Msg::Interest(pkt) => {
                    let action = process_interest(&mut self.nodes[to.index()], &pkt, from, &net.neighbors[to.index()]);
                    self.apply(to, pkt, action, &mut q, net)?;
                }
                Msg::Data(pkt, hops) => {
                    let Some(name) = pkt.name() else { continue };
                    let out = process_data(
                        &mut self.nodes[to.index()],
                        &pkt,
                        hops,
                        self.cfg.caching,
                        &net.neighbors[to.index()],
                    );
                    if out.unsolicited {
                        net.metrics.redundant_arrival(to, name);
                        continue;
                    }
                    if out.deliver_local {
                        net.deliver(to, name, hops)?;
                    }
                    for face in out.send_now {
                        self.send_data(to, face, pkt.clone(), hops + 1, &mut q, net);
                    }
                    if out.new_type {
                        self.advertise(to, &mut q, net);
                    }
                }
            }
        }
        Ok(())
    }
}

impl Protocol for MobCcnNetwork {
    fn contact_up(&mut self, a: NodeId, b: NodeId, net: &mut Net) -> Result<()> {
        let ha = build_hello(&self.nodes[a.index()]);
        let hb = build_hello(&self.nodes[b.index()]);
        net.send(a, b, &ha);
        net.send(b, a, &hb);
        for (x, y, hy) in [(a, b, &hb), (b, a, &ha)] {
            let node = &mut self.nodes[x.index()];
            record_encounter(node, hy, y, net.now);
            process_hello(node, hy, y, &self.cfg.routing);
        }

        let mut q = VecDeque::new();
        for (x, y) in [(a, b), (b, a)] {
            let queued = self.nodes[x.index()].data_out.remove(&y).unwrap_or_default();
            for (pkt, hops) in queued {
                self.send_data(x, y, pkt, hops + 1, &mut q, net);
            }
        }
        for x in [a, b] {
            let out = on_contact_begin_flush(&mut self.nodes[x.index()], &net.neighbors[x.index()]);
            for (to, pkt) in out {
                self.send_interest(x, to, pkt, &mut q, net);
            }
        }
        self.cascade(q, net)
    }

    fn contact_down(&mut self, a: NodeId, b: NodeId, _net: &mut Net) -> Result<()> {
        self.nodes[a.index()].cnu.remove_neighbor(b);
        self.nodes[b.index()].cnu.remove_neighbor(a);
        Ok(())
    }

    fn request(&mut self, req: &Request, net: &mut Net) -> Result<()> {
        let c = req.consumer;
        let pkt = Packet::Interest {
            name: req.name,
            origin: c,
            nonce: req.id,
        };
        let action = process_interest(&mut self.nodes[c.index()], &pkt, c, &net.neighbors[c.index()]);
        let mut q = VecDeque::new();
        self.apply(c, pkt, action, &mut q, net)?;
        self.cascade(q, net)
    }

    fn live_interest_copies(&self) -> BTreeMap<u64, usize> {
        let mut m = BTreeMap::new();
        for n in &self.nodes {
            for (_, p) in n.outbox.iter() {
                if let Packet::Interest { nonce, .. } = p {
                    *m.entry(*nonce).or_insert(0) += 1;
                }
            }
        }
        m
    }

    fn cached_contents(&self) -> usize {
        self.nodes.iter().map(|n| n.cs.len()).sum()
    }
}
