//! Discrete-event executor. Binds a contact trace, a request list and a
//! protocol into one run.
//!
//! Contacts have unlimited bandwidth: everything a contact up or a request
//! triggers is propagated to quiescence before the clock advances.

use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SimError};
use crate::metrics::{Collector, MetricsReport, RunLabels};
use crate::mobility::{ContactEvent, ContactKind};
use crate::model::{ContentName, NodeId, Packet, SizeModel};
use crate::workload::Request;

/// Per-event context handed to a protocol.
pub struct Net<'a> {
    pub now: f64,
    pub neighbors: &'a [BTreeSet<NodeId>],
    pub metrics: &'a mut Collector,
    pub rng: &'a mut ChaCha8Rng,
    log: Option<&'a mut Vec<String>>,
}

impl Net<'_> {
    /// Accounts one transmission of `pkt` from `from` to `to`.
    pub fn send(&mut self, from: NodeId, to: NodeId, pkt: &Packet) {
        self.metrics.record_transmission(pkt);
        if let Some(log) = self.log.as_deref_mut() {
            let what = match pkt {
                Packet::Hello { records } => format!("HELLO\t{from}\t{to}\t{}", records.len()),
                Packet::Interest { name, nonce, .. } => format!("INTEREST\t{from}\t{to}\t{name}\t{nonce}"),
                Packet::Data { name, .. } => format!("DATA\t{from}\t{to}\t{name}"),
            };
            log.push(format!("{:.3}\t{what}", self.now));
        }
    }

    /// Hands Data to the application of `consumer`.
    pub fn deliver(&mut self, consumer: NodeId, name: ContentName, hops: u32) -> Result<usize> {
        if let Some(log) = self.log.as_deref_mut() {
            log.push(format!("{:.3}\tDELIVER\t{consumer}\t{name}\t{hops}", self.now));
        }
        self.metrics.deliver_local(consumer, name, self.now, hops)
    }

    pub fn in_contact(&self, a: NodeId, b: NodeId) -> bool {
        self.neighbors[a.index()].contains(&b)
    }
}

pub trait Protocol {
    /// Called after `a` and `b` have been added to each other's neighbour set.
    fn contact_up(&mut self, a: NodeId, b: NodeId, net: &mut Net) -> Result<()>;
    /// Called after the pair has been removed from the neighbour sets.
    fn contact_down(&mut self, a: NodeId, b: NodeId, net: &mut Net) -> Result<()>;
    /// The request is already registered with the metrics collector.
    fn request(&mut self, req: &Request, net: &mut Net) -> Result<()>;
    /// Live copies (held or carried) per Interest instance.
    fn live_interest_copies(&self) -> BTreeMap<u64, usize>;
    /// Total number of content items cached over all nodes.
    fn cached_contents(&self) -> usize;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EngineOptions {
    /// Scan live Interest copies after every event.
    pub check_invariants: bool,
    pub debug_log: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    /// Line-oriented event log, empty unless requested.
    pub log: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
enum EventKind {
    Contact(usize),
    Request(usize),
}

fn priority(trace: &[ContactEvent], k: EventKind) -> (u8, u64, u64) {
    match k {
        EventKind::Contact(i) => {
            let e = &trace[i];
            let p = match e.kind {
                ContactKind::Down => 0,
                ContactKind::Up => 1,
            };
            (p, u64::from(e.a.0.min(e.b.0)), u64::from(e.a.0.max(e.b.0)))
        }
        EventKind::Request(i) => (2, i as u64, 0),
    }
}

#[derive(Debug, Clone)]
pub struct RunSpec<'a> {
    pub n_nodes: usize,
    pub duration: f64,
    pub trace: &'a [ContactEvent],
    pub requests: &'a [Request],
    pub sizes: SizeModel,
    pub labels: RunLabels,
    pub options: EngineOptions,
}

pub fn run<P: Protocol>(proto: &mut P, spec: RunSpec<'_>, mut rng: ChaCha8Rng) -> Result<RunOutput> {
    let RunSpec {
        n_nodes,
        duration,
        trace,
        requests,
        sizes,
        labels,
        options,
    } = spec;

    let mut events: Vec<(f64, EventKind)> = trace
        .iter()
        .enumerate()
        .map(|(i, e)| (e.time, EventKind::Contact(i)))
        .chain(
            requests
                .iter()
                .enumerate()
                .map(|(i, r)| (r.time, EventKind::Request(i))),
        )
        .collect();
    for &(t, _) in &events {
        if !(0.0..=duration).contains(&t) {
            return Err(SimError::OutOfRange { time: t, duration });
        }
    }
    events.sort_by(|x, y| {
        x.0.total_cmp(&y.0)
            .then_with(|| priority(trace, x.1).cmp(&priority(trace, y.1)))
    });

    let cache_initial = proto.cached_contents();
    let mut neighbors = vec![BTreeSet::new(); n_nodes];
    let mut metrics = Collector::new(sizes);
    let mut log = Vec::new();
    let mut max_copies = 0;

    for (now, kind) in events {
        match kind {
            EventKind::Contact(i) => {
                let e = &trace[i];
                let (a, b) = (e.a.min(e.b), e.a.max(e.b));
                if b.index() >= n_nodes {
                    return Err(SimError::UnknownNode(b));
                }
                if a == b {
                    return Err(SimError::Alternation { a, b, time: now });
                }
                let connected = neighbors[a.index()].contains(&b);
                match (e.kind, connected) {
                    (ContactKind::Up, false) => {
                        neighbors[a.index()].insert(b);
                        neighbors[b.index()].insert(a);
                    }
                    (ContactKind::Down, true) => {
                        neighbors[a.index()].remove(&b);
                        neighbors[b.index()].remove(&a);
                    }
                    _ => return Err(SimError::Alternation { a, b, time: now }),
                }
                let mut net = Net {
                    now,
                    neighbors: &neighbors,
                    metrics: &mut metrics,
                    rng: &mut rng,
                    log: options.debug_log.then_some(&mut log),
                };
                match e.kind {
                    ContactKind::Up => proto.contact_up(a, b, &mut net)?,
                    ContactKind::Down => proto.contact_down(a, b, &mut net)?,
                }
            }
            EventKind::Request(i) => {
                let r = &requests[i];
                if r.consumer.index() >= n_nodes {
                    return Err(SimError::UnknownNode(r.consumer));
                }
                metrics.register_request(r);
                let mut net = Net {
                    now,
                    neighbors: &neighbors,
                    metrics: &mut metrics,
                    rng: &mut rng,
                    log: options.debug_log.then_some(&mut log),
                };
                if let Some(l) = net.log.as_deref_mut() {
                    l.push(format!("{now:.3}\tREQUEST\t{}\t{}\t{}", r.consumer, r.name, r.id));
                }
                proto.request(r, &mut net)?;
            }
        }
        if options.check_invariants {
            let m = proto.live_interest_copies().into_values().max().unwrap_or(0);
            max_copies = max_copies.max(m);
        }
    }

    let mut report = metrics.finish(labels, cache_initial, proto.cached_contents());
    report.max_live_interest_copies = max_copies;
    Ok(RunOutput { report, log })
}
