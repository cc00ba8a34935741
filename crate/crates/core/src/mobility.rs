//! Community mobility and contact traces.
//!
//! The area is divided into one cell per community (a single community uses
//! the whole area, which is plain random waypoint). Nodes move between
//! uniformly drawn waypoints of their home cell at a speed drawn per leg.
//! Travellers pick their next waypoint inside a foreign community's cell with
//! a fixed probability.

use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::model::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ContactKind {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactEvent {
    pub time: f64,
    pub a: NodeId,
    pub b: NodeId,
    pub kind: ContactKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContactTrace {
    pub events: Vec<ContactEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityConfig {
    pub area_side: f64,
    pub n_nodes: usize,
    pub n_communities: usize,
    pub tx_range: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub duration: f64,
    pub tick: f64,
    /// Movement simulated and discarded before t = 0.
    pub burn_in: f64,
    /// Probability that a traveller's next waypoint lies in a foreign cell.
    pub foreign_prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    fn dist2(self, o: Point) -> f64 {
        (self.x - o.x).powi(2) + (self.y - o.y).powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    x0: f64,
    y0: f64,
    side: f64,
}

impl Cell {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        Point {
            x: self.x0 + rng.random::<f64>() * self.side,
            y: self.y0 + rng.random::<f64>() * self.side,
        }
    }
}

/// Home cells on the smallest square grid with a cell per community.
fn community_cells(area_side: f64, n_communities: usize) -> Vec<Cell> {
    let g = (n_communities as f64).sqrt().ceil().max(1.0) as usize;
    let side = area_side / g as f64;
    (0..n_communities)
        .map(|c| Cell {
            x0: (c % g) as f64 * side,
            y0: (c / g) as f64 * side,
            side,
        })
        .collect()
}

#[derive(Debug, Clone)]
struct Walker {
    pos: Point,
    target: Point,
    speed: f64,
    home: usize,
    traveller: bool,
}

/// Moves every node one tick at a time.
#[derive(Debug, Clone)]
pub struct Mover {
    cfg: MobilityConfig,
    cells: Vec<Cell>,
    walkers: Vec<Walker>,
    rng: ChaCha8Rng,
    positions: Vec<Point>,
}

impl Mover {
    /// `homes[i]` is the community of node `i`; `travellers` lists the nodes
    /// that visit foreign communities. Runs the burn-in.
    pub fn new(cfg: &MobilityConfig, homes: &[usize], travellers: &[NodeId], mut rng: ChaCha8Rng) -> Self {
        let cells = community_cells(cfg.area_side, cfg.n_communities);
        let mut walkers = Vec::with_capacity(cfg.n_nodes);
        for (i, &home) in homes.iter().enumerate() {
            let pos = cells[home].sample(&mut rng);
            let target = cells[home].sample(&mut rng);
            let speed = rng.random_range(cfg.speed_min..=cfg.speed_max);
            walkers.push(Walker {
                pos,
                target,
                speed,
                home,
                traveller: travellers.contains(&NodeId(i as u32)),
            });
        }
        let mut m = Mover {
            cfg: cfg.clone(),
            cells,
            walkers,
            rng,
            positions: Vec::new(),
        };
        let burn_ticks = (cfg.burn_in / cfg.tick).round() as u64;
        for _ in 0..burn_ticks {
            m.advance();
        }
        m.positions = m.walkers.iter().map(|w| w.pos).collect();
        m
    }

    fn next_cell(&mut self, w: usize) -> usize {
        let (home, traveller) = (self.walkers[w].home, self.walkers[w].traveller);
        let k = self.cells.len();
        if traveller && k > 1 && self.rng.random::<f64>() < self.cfg.foreign_prob {
            let j = self.rng.random_range(0..k - 1);
            if j >= home {
                j + 1
            } else {
                j
            }
        } else {
            home
        }
    }

    fn advance(&mut self) {
        for i in 0..self.walkers.len() {
            let w = &self.walkers[i];
            let step = w.speed * self.cfg.tick;
            let d = w.pos.dist2(w.target).sqrt();
            if d <= step {
                let cell = self.next_cell(i);
                let target = self.cells[cell].sample(&mut self.rng);
                let speed = self.rng.random_range(self.cfg.speed_min..=self.cfg.speed_max);
                let w = &mut self.walkers[i];
                w.pos = w.target;
                w.target = target;
                w.speed = speed;
            } else {
                let w = &mut self.walkers[i];
                let f = step / d;
                w.pos.x += (w.target.x - w.pos.x) * f;
                w.pos.y += (w.target.y - w.pos.y) * f;
            }
        }
    }

    /// Positions at the current tick.
    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn step(&mut self) -> &[Point] {
        self.advance();
        self.positions = self.walkers.iter().map(|w| w.pos).collect();
        &self.positions
    }
}

/// Positions at every tick in `[0, duration]`. Memory grows with the run
/// length; [`generate_trace`] streams instead.
pub fn generate_positions(
    cfg: &MobilityConfig,
    homes: &[usize],
    travellers: &[NodeId],
    rng: ChaCha8Rng,
) -> Vec<Vec<Point>> {
    let mut m = Mover::new(cfg, homes, travellers, rng);
    let ticks = (cfg.duration / cfg.tick).floor() as u64;
    let mut out = vec![m.positions().to_vec()];
    for _ in 0..ticks {
        out.push(m.step().to_vec());
    }
    out
}

/// Turns successive position snapshots into Up/Down transitions.
#[derive(Debug, Clone)]
pub struct ContactDetector {
    n: usize,
    range2: f64,
    connected: Vec<bool>,
    pub events: Vec<ContactEvent>,
}

impl ContactDetector {
    pub fn new(n: usize, tx_range: f64) -> Self {
        ContactDetector {
            n,
            range2: tx_range * tx_range,
            connected: vec![false; n * n],
            events: Vec::new(),
        }
    }

    pub fn observe(&mut self, time: f64, pos: &[Point]) {
        for a in 0..self.n {
            for b in a + 1..self.n {
                let near = pos[a].dist2(pos[b]) <= self.range2;
                let c = &mut self.connected[a * self.n + b];
                if near != *c {
                    *c = near;
                    self.events.push(ContactEvent {
                        time,
                        a: NodeId(a as u32),
                        b: NodeId(b as u32),
                        kind: if near { ContactKind::Up } else { ContactKind::Down },
                    });
                }
            }
        }
    }
}

/// Snapshot `k` is taken at `k * tick`.
pub fn contacts_from_positions<'a>(
    positions: impl IntoIterator<Item = &'a [Point]>,
    tx_range: f64,
    tick: f64,
) -> ContactTrace {
    let mut det: Option<ContactDetector> = None;
    for (k, snap) in positions.into_iter().enumerate() {
        let d = det.get_or_insert_with(|| ContactDetector::new(snap.len(), tx_range));
        d.observe(k as f64 * tick, snap);
    }
    ContactTrace {
        events: det.map(|d| d.events).unwrap_or_default(),
    }
}

pub fn generate_trace(cfg: &MobilityConfig, homes: &[usize], travellers: &[NodeId], rng: ChaCha8Rng) -> ContactTrace {
    let mut m = Mover::new(cfg, homes, travellers, rng);
    let mut det = ContactDetector::new(cfg.n_nodes, cfg.tx_range);
    det.observe(0.0, m.positions());
    let ticks = (cfg.duration / cfg.tick).floor() as u64;
    for k in 1..=ticks {
        let t = k as f64 * cfg.tick;
        det.observe(t, m.step());
    }
    ContactTrace { events: det.events }
}

/// Checks time order and Up/Down alternation per pair.
pub fn validate_trace(trace: &ContactTrace) -> Result<()> {
    let mut open = std::collections::BTreeSet::new();
    let mut last = f64::NEG_INFINITY;
    for (i, e) in trace.events.iter().enumerate() {
        if e.time < last {
            return Err(SimError::TraceFormat {
                line: i + 2,
                msg: format!("time {} goes backwards", e.time),
            });
        }
        last = e.time;
        let key = (e.a.min(e.b), e.a.max(e.b));
        let ok = match e.kind {
            ContactKind::Up => key.0 != key.1 && open.insert(key),
            ContactKind::Down => open.remove(&key),
        };
        if !ok {
            return Err(SimError::Alternation {
                a: key.0,
                b: key.1,
                time: e.time,
            });
        }
    }
    Ok(())
}

pub const TRACE_HEADER: &str = "# oppnet-trace v1";

pub fn write_trace(trace: &ContactTrace) -> String {
    let mut out = String::with_capacity(trace.events.len() * 24 + 20);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for e in &trace.events {
        let k = match e.kind {
            ContactKind::Up => "UP",
            ContactKind::Down => "DOWN",
        };
        let _ = writeln!(out, "{:.3}\t{}\t{}\t{k}", e.time, e.a.min(e.b), e.a.max(e.b));
    }
    out
}

pub fn read_trace(text: &str) -> Result<ContactTrace> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => {
            return Err(SimError::TraceFormat {
                line: 1,
                msg: format!("expected header `{TRACE_HEADER}`"),
            })
        }
    }
    let mut events = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: &str| SimError::TraceFormat {
            line: i + 1,
            msg: msg.to_string(),
        };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(err("expected 4 tab-separated fields"));
        }
        let time: f64 = f[0].parse().map_err(|_| err("bad time"))?;
        if !time.is_finite() || time < 0.0 {
            return Err(err("bad time"));
        }
        let a: u32 = f[1].parse().map_err(|_| err("bad node id"))?;
        let b: u32 = f[2].parse().map_err(|_| err("bad node id"))?;
        let kind = match f[3] {
            "UP" => ContactKind::Up,
            "DOWN" => ContactKind::Down,
            _ => return Err(err("kind must be UP or DOWN")),
        };
        events.push(ContactEvent {
            time,
            a: NodeId(a.min(b)),
            b: NodeId(a.max(b)),
            kind,
        });
    }
    let trace = ContactTrace { events };
    validate_trace(&trace)?;
    Ok(trace)
}
