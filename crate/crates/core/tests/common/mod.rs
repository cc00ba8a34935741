#![allow(dead_code)]

use std::collections::BTreeMap;

use oppsim::engine::{self, EngineOptions, Protocol, RunOutput, RunSpec};
use oppsim::metrics::RunLabels;
use oppsim::mobility::{ContactEvent, ContactKind};
use oppsim::model::SizeModel;
use oppsim::workload::{Placement, Request};
use oppsim::{ContentName, NodeId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Fixture {
    pub n: usize,
    pub duration: f64,
    pub trace: Vec<ContactEvent>,
    pub requests: Vec<Request>,
    pub placement: Placement,
}

pub fn contact(t0: f64, t1: f64, a: u32, b: u32) -> [ContactEvent; 2] {
    let e = |time, kind| ContactEvent {
        time,
        a: NodeId(a),
        b: NodeId(b),
        kind,
    };
    [e(t0, ContactKind::Up), e(t1, ContactKind::Down)]
}

pub fn request(id: u64, time: f64, consumer: u32, t: u32, c: u32) -> Request {
    Request {
        id,
        time,
        consumer: NodeId(consumer),
        name: ContentName::new(t, c),
        home: None,
    }
}

pub fn placement(owners: &[(u32, u32)], chunks: u32) -> Placement {
    let owner: BTreeMap<u32, NodeId> = owners.iter().map(|&(t, p)| (t, NodeId(p))).collect();
    Placement::from_owners(owner, chunks, 1024)
}

/// Consumer 0, relay 1, producer 2 of type 0. Hellos seed the routes
/// (1–2, then 0–1) before the request at t=100.
pub fn chain3() -> Fixture {
    let contacts = [
        contact(10.0, 20.0, 1, 2),
        contact(30.0, 40.0, 0, 1),
        contact(200.0, 250.0, 0, 1),
        contact(300.0, 350.0, 1, 2),
        contact(400.0, 450.0, 0, 1),
    ];
    Fixture {
        n: 3,
        duration: 1000.0,
        trace: contacts.concat(),
        requests: vec![request(0, 100.0, 0, 0, 1)],
        placement: placement(&[(0, 2)], 4),
    }
}

/// Line 0–1–2–3–4 with the producer at 4. Routes are seeded from the
/// producer outwards; the same pairs then meet once towards the producer
/// and once back.
pub fn chain5() -> Fixture {
    let contacts = [
        contact(10.0, 20.0, 3, 4),
        contact(30.0, 40.0, 2, 3),
        contact(50.0, 60.0, 1, 2),
        contact(70.0, 80.0, 0, 1),
        contact(200.0, 210.0, 0, 1),
        contact(300.0, 310.0, 1, 2),
        contact(400.0, 410.0, 2, 3),
        contact(500.0, 510.0, 3, 4),
        contact(600.0, 610.0, 2, 3),
        contact(700.0, 710.0, 1, 2),
        contact(800.0, 810.0, 0, 1),
    ];
    Fixture {
        n: 5,
        duration: 1000.0,
        trace: contacts.concat(),
        requests: vec![request(0, 100.0, 0, 0, 1)],
        placement: placement(&[(0, 4)], 4),
    }
}

pub fn labels(protocol: &str) -> RunLabels {
    RunLabels {
        run: 0,
        seed: 0,
        protocol: protocol.to_string(),
        cache: false,
        retrans: false,
    }
}

pub fn run<P: Protocol>(proto: &mut P, f: &Fixture, seed: u64) -> RunOutput {
    let spec = RunSpec {
        n_nodes: f.n,
        duration: f.duration,
        trace: &f.trace,
        requests: &f.requests,
        sizes: SizeModel::default(),
        labels: labels("fixture"),
        options: EngineOptions {
            check_invariants: true,
            debug_log: true,
        },
    };
    engine::run(proto, spec, ChaCha8Rng::seed_from_u64(seed)).expect("fixture runs")
}

/// `(time, from, to)` of every Interest transmission carrying `nonce`.
pub fn interest_hops(log: &[String], nonce: u64) -> Vec<(f64, u32, u32)> {
    hops(log, "INTEREST", |f| f.len() == 6 && f[5] == nonce.to_string())
}

/// `(time, from, to)` of every Data transmission of `name`.
pub fn data_hops(log: &[String], name: ContentName) -> Vec<(f64, u32, u32)> {
    hops(log, "DATA", |f| f.len() == 5 && f[4] == name.to_string())
}

fn hops(log: &[String], kind: &str, keep: impl Fn(&[&str]) -> bool) -> Vec<(f64, u32, u32)> {
    log.iter()
        .map(|l| l.split('\t').collect::<Vec<_>>())
        .filter(|f| f[1] == kind && keep(f))
        .map(|f| (f[0].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap()))
        .collect()
}

/// Node sequence of a chain of hops.
pub fn path(hops: &[(f64, u32, u32)]) -> Vec<u32> {
    let mut p: Vec<u32> = hops.first().map(|h| vec![h.1]).unwrap_or_default();
    for h in hops {
        assert_eq!(Some(&h.1), p.last(), "hops do not form a chain: {hops:?}");
        p.push(h.2);
    }
    p
}
