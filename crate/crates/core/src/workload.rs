//! Node roles, initial content placement and request generation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::model::{ContentName, ContentType, NodeId};

/// One content request issued by a consumer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub time: f64,
    pub consumer: NodeId,
    pub name: ContentName,
    /// Whether the content lives in the consumer's own community; `None`
    /// with a single community.
    pub home: Option<bool>,
}

/// Communities are contiguous blocks of node ids. Producers take the first
/// slots of each community (round robin over communities), consumers the
/// next ones, and the traveller of a community is its last member.
#[derive(Debug, Clone, PartialEq)]
pub struct Roles {
    pub communities: Vec<Vec<NodeId>>,
    pub producers: Vec<NodeId>,
    pub consumers: Vec<NodeId>,
    pub travellers: Vec<NodeId>,
    community_of: Vec<usize>,
}

impl Roles {
    pub fn assign(
        n_nodes: usize,
        n_communities: usize,
        n_producers: usize,
        n_consumers: usize,
        n_travellers: usize,
    ) -> Result<Roles> {
        if n_communities == 0 || n_communities > n_nodes {
            return Err(SimError::config("n_communities", "must be between 1 and n_nodes"));
        }
        if n_travellers > n_communities {
            return Err(SimError::config("n_travellers", "at most one traveller per community"));
        }
        if n_producers + n_consumers > n_nodes {
            return Err(SimError::config("n_consumers", "producers + consumers exceed n_nodes"));
        }
        let k = n_communities;
        let communities: Vec<Vec<NodeId>> = (0..k)
            .map(|c| {
                (c * n_nodes / k..(c + 1) * n_nodes / k)
                    .map(|i| NodeId(i as u32))
                    .collect()
            })
            .collect();
        let mut community_of = vec![0; n_nodes];
        for (c, members) in communities.iter().enumerate() {
            for m in members {
                community_of[m.index()] = c;
            }
        }
        let mut used: Vec<usize> = vec![0; k];
        let mut take = |i: usize, key: &str| -> Result<NodeId> {
            let c = i % k;
            let slot = used[c];
            used[c] += 1;
            communities[c]
                .get(slot)
                .copied()
                .ok_or_else(|| SimError::config(key, format!("community {c} has too few members")))
        };
        let producers = (0..n_producers)
            .map(|i| take(i, "n_producers"))
            .collect::<Result<Vec<_>>>()?;
        let consumers = (0..n_consumers)
            .map(|i| take(i, "n_consumers"))
            .collect::<Result<Vec<_>>>()?;
        let mut travellers = Vec::new();
        for (c, members) in communities.iter().enumerate().take(n_travellers) {
            if used[c] >= members.len() {
                return Err(SimError::config(
                    "n_travellers",
                    format!("community {c} has no free member"),
                ));
            }
            travellers.push(*members.last().expect("community is non-empty"));
        }
        Ok(Roles {
            communities,
            producers,
            consumers,
            travellers,
            community_of,
        })
    }

    pub fn community_of(&self, n: NodeId) -> usize {
        self.community_of[n.index()]
    }

    /// Home community per node, in node order.
    pub fn homes(&self) -> &[usize] {
        &self.community_of
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlacementKind {
    /// Every type goes to a producer drawn uniformly at random.
    Uniform,
    /// Types are shuffled and dealt to producers in turn.
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InterRequest {
    /// Whole-second gaps; mean `mean_s`.
    Geometric {
        mean_s: f64,
    },
    Exponential {
        mean_s: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RequestTiming {
    /// Each request time is the warm-up end plus an independent draw.
    Offset,
    /// Requests form a renewal process starting at the warm-up end.
    Renewal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficConfig {
    pub n_content_types: u32,
    pub chunks_per_type: u32,
    pub requests_per_consumer: usize,
    pub inter_request: InterRequest,
    pub timing: RequestTiming,
    pub placement: PlacementKind,
    /// Share of requests aimed at the consumer's own community (several
    /// communities only).
    pub home_fraction: f64,
    pub warmup_end: f64,
    pub request_end: f64,
    pub payload_bytes: u32,
    /// Bounded resampling of draws falling past `request_end`.
    pub max_resample: u32,
}

/// Which producer initially holds which content.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub payload_bytes: u32,
    owner: BTreeMap<ContentType, NodeId>,
    holdings: BTreeMap<NodeId, BTreeSet<ContentName>>,
}

impl Placement {
    pub fn from_owners(owner: BTreeMap<ContentType, NodeId>, chunks_per_type: u32, payload_bytes: u32) -> Self {
        let mut holdings: BTreeMap<NodeId, BTreeSet<ContentName>> = BTreeMap::new();
        for (&t, &p) in &owner {
            holdings
                .entry(p)
                .or_default()
                .extend((0..chunks_per_type).map(|c| ContentName::new(t, c)));
        }
        Placement {
            payload_bytes,
            owner,
            holdings,
        }
    }

    pub fn holdings(&self) -> &BTreeMap<NodeId, BTreeSet<ContentName>> {
        &self.holdings
    }

    pub fn owner(&self, t: ContentType) -> Option<NodeId> {
        self.owner.get(&t).copied()
    }

    pub fn total(&self) -> usize {
        self.holdings.values().map(BTreeSet::len).sum()
    }

    pub fn all_names(&self) -> Vec<ContentName> {
        self.holdings
            .values()
            .flatten()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

pub fn place_content(cfg: &TrafficConfig, roles: &Roles, rng: &mut ChaCha8Rng) -> Placement {
    let mut owner = BTreeMap::new();
    let p = &roles.producers;
    if !p.is_empty() {
        match cfg.placement {
            PlacementKind::Uniform => {
                for t in 0..cfg.n_content_types {
                    owner.insert(t, p[rng.random_range(0..p.len())]);
                }
            }
            PlacementKind::Balanced => {
                let mut types: Vec<ContentType> = (0..cfg.n_content_types).collect();
                types.shuffle(rng);
                for (i, t) in types.into_iter().enumerate() {
                    owner.insert(t, p[i % p.len()]);
                }
            }
        }
    }
    Placement::from_owners(owner, cfg.chunks_per_type, cfg.payload_bytes)
}

fn draw_gap(law: InterRequest, rng: &mut ChaCha8Rng) -> f64 {
    match law {
        InterRequest::Geometric { mean_s } => {
            let g = Geometric::new(1.0 / mean_s).expect("mean of at least one second");
            (g.sample(rng) + 1) as f64
        }
        InterRequest::Exponential { mean_s } => Exp::new(1.0 / mean_s).expect("positive mean").sample(rng),
    }
}

fn quantize(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

fn request_times(cfg: &TrafficConfig, consumer: NodeId, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let n = cfg.requests_per_consumer;
    let overflow = || SimError::WindowOverflow { consumer, requested: n };
    match cfg.timing {
        RequestTiming::Offset => {
            let mut times = Vec::with_capacity(n);
            for _ in 0..n {
                let mut placed = None;
                for _ in 0..cfg.max_resample.max(1) {
                    let t = quantize(cfg.warmup_end + draw_gap(cfg.inter_request, rng));
                    if t <= cfg.request_end {
                        placed = Some(t);
                        break;
                    }
                }
                times.push(placed.ok_or_else(overflow)?);
            }
            Ok(times)
        }
        RequestTiming::Renewal => {
            for _ in 0..cfg.max_resample.max(1) {
                let mut t = cfg.warmup_end;
                let mut times = Vec::with_capacity(n);
                for _ in 0..n {
                    t += draw_gap(cfg.inter_request, rng);
                    times.push(quantize(t));
                }
                if times.last().is_none_or(|&l| l <= cfg.request_end) {
                    return Ok(times);
                }
            }
            Err(overflow())
        }
    }
}

fn names_of_community(placement: &Placement, roles: &Roles, c: usize) -> Vec<ContentName> {
    placement
        .holdings()
        .iter()
        .filter(|(p, _)| roles.community_of(**p) == c)
        .flat_map(|(_, names)| names.iter().copied())
        .collect()
}

/// Home flag of a request for `name` by `consumer`.
pub fn home_label(roles: &Roles, placement: &Placement, consumer: NodeId, name: ContentName) -> Option<bool> {
    if roles.communities.len() < 2 {
        return None;
    }
    placement
        .owner(name.content_type)
        .map(|p| roles.community_of(p) == roles.community_of(consumer))
}

/// Time-ordered requests of every consumer, ids assigned in that order.
pub fn generate_requests(
    cfg: &TrafficConfig,
    placement: &Placement,
    roles: &Roles,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Request>> {
    let all = placement.all_names();
    let k = roles.communities.len();
    let per_community: Vec<Vec<ContentName>> = (0..k).map(|c| names_of_community(placement, roles, c)).collect();
    let mut out = Vec::new();
    if all.is_empty() {
        return Ok(out);
    }
    for &consumer in &roles.consumers {
        let times = request_times(cfg, consumer, rng)?;
        let home = roles.community_of(consumer);
        let foreign: Vec<usize> = (0..k).filter(|&c| c != home && !per_community[c].is_empty()).collect();
        for time in times {
            let pool: &[ContentName] = if k < 2 {
                &all
            } else if rng.random::<f64>() < cfg.home_fraction && !per_community[home].is_empty() {
                &per_community[home]
            } else if !foreign.is_empty() {
                &per_community[foreign[rng.random_range(0..foreign.len())]]
            } else {
                &all
            };
            let name = pool[rng.random_range(0..pool.len())];
            out.push(Request {
                id: 0,
                time,
                consumer,
                name,
                home: home_label(roles, placement, consumer, name),
            });
        }
    }
    sort_and_number(&mut out);
    Ok(out)
}

fn sort_and_number(reqs: &mut [Request]) {
    reqs.sort_by(|a, b| {
        a.time
            .total_cmp(&b.time)
            .then(a.consumer.cmp(&b.consumer))
            .then(a.name.cmp(&b.name))
    });
    for (i, r) in reqs.iter_mut().enumerate() {
        r.id = i as u64;
    }
}

pub const WORKLOAD_HEADER: &str = "# oppnet-workload v1";

pub fn write_workload(reqs: &[Request]) -> String {
    let mut out = String::from(WORKLOAD_HEADER);
    out.push('\n');
    for r in reqs {
        let _ = writeln!(
            out,
            "{:.3}\t{}\t{}\t{}",
            r.time, r.consumer, r.name.content_type, r.name.chunk
        );
    }
    out
}

/// Parses `time<TAB>consumer<TAB>type<TAB>chunk` lines; `#` lines are
/// comments. Home flags are recomputed from `roles` and `placement`.
pub fn read_workload(text: &str, roles: &Roles, placement: &Placement) -> Result<Vec<Request>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: &str| SimError::WorkloadFormat {
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
        let consumer = NodeId(f[1].parse().map_err(|_| err("bad consumer id"))?);
        let t: u32 = f[2].parse().map_err(|_| err("bad content type"))?;
        let c: u32 = f[3].parse().map_err(|_| err("bad chunk"))?;
        let name = ContentName::new(t, c);
        out.push(Request {
            id: 0,
            time,
            consumer,
            name,
            home: home_label(roles, placement, consumer, name),
        });
    }
    sort_and_number(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn traffic_a() -> TrafficConfig {
        TrafficConfig {
            n_content_types: 10,
            chunks_per_type: 25,
            requests_per_consumer: 50,
            inter_request: InterRequest::Geometric { mean_s: 10000.0 },
            timing: RequestTiming::Offset,
            placement: PlacementKind::Uniform,
            home_fraction: 0.5,
            warmup_end: 43200.0,
            request_end: 79200.0,
            payload_bytes: 1024,
            max_resample: 1000,
        }
    }

    fn traffic_b() -> TrafficConfig {
        TrafficConfig {
            n_content_types: 12,
            chunks_per_type: 5,
            requests_per_consumer: 40,
            inter_request: InterRequest::Exponential { mean_s: 1000.0 },
            timing: RequestTiming::Renewal,
            placement: PlacementKind::Balanced,
            ..traffic_a()
        }
    }

    #[test]
    fn roles_scenario_a() {
        let r = Roles::assign(10, 1, 4, 5, 0).unwrap();
        assert_eq!(r.producers, (0..4).map(NodeId).collect::<Vec<_>>());
        assert_eq!(r.consumers, (4..9).map(NodeId).collect::<Vec<_>>());
        assert!(r.travellers.is_empty());
    }

    #[test]
    fn roles_scenario_b() {
        let r = Roles::assign(30, 3, 3, 3, 3).unwrap();
        assert_eq!(r.producers, vec![NodeId(0), NodeId(10), NodeId(20)]);
        assert_eq!(r.consumers, vec![NodeId(1), NodeId(11), NodeId(21)]);
        assert_eq!(r.travellers, vec![NodeId(9), NodeId(19), NodeId(29)]);
        assert_eq!(r.community_of(NodeId(15)), 1);
    }

    #[test]
    fn roles_overflow() {
        assert!(matches!(
            Roles::assign(10, 1, 4, 20, 0),
            Err(SimError::Config { key, .. }) if key == "n_consumers"
        ));
    }

    #[test]
    fn placement_scenario_a() {
        let roles = Roles::assign(10, 1, 4, 1, 0).unwrap();
        let p = place_content(&traffic_a(), &roles, &mut stream(1, Stream::Workload));
        assert_eq!(p.total(), 250);
        assert_eq!(p.all_names().len(), 250);
        assert!(p.holdings().keys().all(|n| roles.producers.contains(n)));
    }

    #[test]
    fn placement_scenario_b() {
        let roles = Roles::assign(30, 3, 3, 3, 3).unwrap();
        let p = place_content(&traffic_b(), &roles, &mut stream(1, Stream::Workload));
        assert_eq!(p.total(), 60);
        assert!(p.holdings().values().all(|s| s.len() == 20));
    }

    #[test]
    fn single_producer_holds_everything() {
        let roles = Roles::assign(3, 1, 1, 1, 0).unwrap();
        let p = place_content(&traffic_a(), &roles, &mut stream(1, Stream::Workload));
        assert_eq!(p.holdings().len(), 1);
        assert_eq!(p.holdings()[&NodeId(0)].len(), 250);
    }

    #[test]
    fn requests_scenario_a_in_window() {
        let cfg = traffic_a();
        let roles = Roles::assign(10, 1, 4, 1, 0).unwrap();
        let mut rng = stream(3, Stream::Workload);
        let p = place_content(&cfg, &roles, &mut rng);
        let reqs = generate_requests(&cfg, &p, &roles, &mut rng).unwrap();
        assert_eq!(reqs.len(), 50);
        assert!(reqs.iter().all(|r| (43200.0..=79200.0).contains(&r.time)));
        assert!(reqs.iter().all(|r| r.time.fract() == 0.0 && r.home.is_none()));
        assert!(reqs.windows(2).all(|w| w[0].time <= w[1].time));
        assert!(reqs.iter().enumerate().all(|(i, r)| r.id == i as u64));
    }

    #[test]
    fn zero_consumers_no_requests() {
        let cfg = traffic_a();
        let roles = Roles::assign(10, 1, 4, 0, 0).unwrap();
        let mut rng = stream(3, Stream::Workload);
        let p = place_content(&cfg, &roles, &mut rng);
        assert!(generate_requests(&cfg, &p, &roles, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn renewal_counts_and_window() {
        let cfg = traffic_b();
        let roles = Roles::assign(30, 3, 3, 3, 3).unwrap();
        let mut rng = stream(4, Stream::Workload);
        let p = place_content(&cfg, &roles, &mut rng);
        let reqs = generate_requests(&cfg, &p, &roles, &mut rng).unwrap();
        for c in &roles.consumers {
            assert_eq!(reqs.iter().filter(|r| r.consumer == *c).count(), 40);
        }
        assert!(reqs.iter().all(|r| (43200.0..=79200.0).contains(&r.time)));
        assert!(reqs.iter().all(|r| r.home.is_some()));
    }

    #[test]
    fn impossible_window_is_reported() {
        let mut cfg = traffic_b();
        cfg.request_end = cfg.warmup_end + 10.0;
        cfg.max_resample = 5;
        let roles = Roles::assign(30, 3, 3, 3, 3).unwrap();
        let mut rng = stream(4, Stream::Workload);
        let p = place_content(&cfg, &roles, &mut rng);
        assert!(matches!(
            generate_requests(&cfg, &p, &roles, &mut rng),
            Err(SimError::WindowOverflow { requested: 40, .. })
        ));
    }

    #[test]
    fn home_split_converges() {
        let cfg = traffic_b();
        let roles = Roles::assign(30, 3, 3, 3, 3).unwrap();
        let (mut home, mut total) = (0usize, 0usize);
        for seed in 0..50 {
            let mut rng = stream(seed, Stream::Workload);
            let p = place_content(&cfg, &roles, &mut rng);
            let reqs = generate_requests(&cfg, &p, &roles, &mut rng).unwrap();
            home += reqs.iter().filter(|r| r.home == Some(true)).count();
            total += reqs.len();
        }
        let frac = home as f64 / total as f64;
        assert!((frac - 0.5).abs() <= 0.05, "home fraction {frac}");
    }

    #[test]
    fn workload_file_round_trip() {
        let cfg = traffic_b();
        let roles = Roles::assign(30, 3, 3, 3, 3).unwrap();
        let mut rng = stream(8, Stream::Workload);
        let p = place_content(&cfg, &roles, &mut rng);
        let reqs = generate_requests(&cfg, &p, &roles, &mut rng).unwrap();
        let back = read_workload(&write_workload(&reqs), &roles, &p).unwrap();
        assert_eq!(back, reqs);
        assert!(matches!(
            read_workload("1.0\t2\tx\t0\n", &roles, &p),
            Err(SimError::WorkloadFormat { line: 1, .. })
        ));
    }
}
