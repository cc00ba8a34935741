//! Performance indices: delivery, delay, hop count, traffic split by packet
//! class, duplicates and cache growth, plus cross-run aggregation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Result, SimError};
use crate::model::{ContentName, NodeId, Packet, PacketKind, SizeModel};
use crate::workload::Request;

/// Percentage growth of cached items over a run.
pub fn cache_utilization(c_initial: usize, c_final: usize) -> Result<f64> {
    if c_initial == 0 {
        return Err(SimError::EmptyInitialCache);
    }
    Ok((c_final as f64 - c_initial as f64) / c_initial as f64 * 100.0)
}

#[derive(Debug, Clone)]
struct RequestState {
    time: f64,
    consumer: NodeId,
    home: Option<bool>,
    delivered: Option<(f64, u32)>,
}

/// Accumulates everything a run reports.
#[derive(Debug, Clone)]
pub struct Collector {
    sizes: SizeModel,
    requests: BTreeMap<u64, RequestState>,
    pending: BTreeMap<(NodeId, ContentName), Vec<u64>>,
    requested: BTreeSet<(NodeId, ContentName)>,
    bytes_interest: u64,
    bytes_data: u64,
    bytes_control: u64,
    duplicates: u64,
    receptions: u64,
}

impl Collector {
    pub fn new(sizes: SizeModel) -> Self {
        Collector {
            sizes,
            requests: BTreeMap::new(),
            pending: BTreeMap::new(),
            requested: BTreeSet::new(),
            bytes_interest: 0,
            bytes_data: 0,
            bytes_control: 0,
            duplicates: 0,
            receptions: 0,
        }
    }

    pub fn register_request(&mut self, req: &Request) {
        self.requests.insert(
            req.id,
            RequestState {
                time: req.time,
                consumer: req.consumer,
                home: req.home,
                delivered: None,
            },
        );
        self.pending.entry((req.consumer, req.name)).or_default().push(req.id);
        self.requested.insert((req.consumer, req.name));
    }

    /// Records a Data arrival for request `id`. Returns false (and counts a
    /// duplicate) when the request was already satisfied.
    pub fn record_delivery(&mut self, id: u64, time: f64, hops: u32) -> Result<bool> {
        let st = self.requests.get_mut(&id).ok_or(SimError::UnknownRequest(id))?;
        debug_assert!(time >= st.time);
        self.receptions += 1;
        if st.delivered.is_some() {
            self.duplicates += 1;
            return Ok(false);
        }
        st.delivered = Some((time, hops));
        Ok(true)
    }

    /// Data for `name` handed to the application of `consumer`: satisfies
    /// every pending request of that consumer for the name.
    pub fn deliver_local(&mut self, consumer: NodeId, name: ContentName, time: f64, hops: u32) -> Result<usize> {
        match self.pending.remove(&(consumer, name)) {
            Some(ids) => {
                for &id in &ids {
                    self.record_delivery(id, time, hops)?;
                }
                Ok(ids.len())
            }
            None if self.requested.contains(&(consumer, name)) => {
                self.duplicates += 1;
                self.receptions += 1;
                Ok(0)
            }
            None => Err(SimError::UnmatchedDelivery { node: consumer, name }),
        }
    }

    /// Data that reached a node with nothing pending for it. Counted as a
    /// duplicate when the node had requested the name before.
    pub fn redundant_arrival(&mut self, node: NodeId, name: ContentName) -> bool {
        if self.requested.contains(&(node, name)) {
            self.duplicates += 1;
            self.receptions += 1;
            true
        } else {
            false
        }
    }

    pub fn is_pending(&self, consumer: NodeId, name: ContentName) -> bool {
        self.pending.contains_key(&(consumer, name))
    }

    pub fn has_requested(&self, consumer: NodeId, name: ContentName) -> bool {
        self.requested.contains(&(consumer, name))
    }

    pub fn record_transmission(&mut self, p: &Packet) {
        let b = self.sizes.size_bytes(p);
        match p.kind() {
            PacketKind::Hello => self.bytes_control += b,
            PacketKind::Interest => self.bytes_interest += b,
            PacketKind::Data => self.bytes_data += b,
        }
    }

    pub fn bytes(&self) -> (u64, u64, u64) {
        (self.bytes_interest, self.bytes_data, self.bytes_control)
    }

    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }

    pub fn finish(self, labels: RunLabels, cache_initial: usize, cache_final: usize) -> MetricsReport {
        let mut delays = Vec::new();
        let mut hops = Vec::new();
        let mut delivery_times = Vec::new();
        let mut per_consumer: BTreeMap<NodeId, (usize, usize)> = BTreeMap::new();
        let (mut home_req, mut home_ok, mut foreign_req, mut foreign_ok) = (0usize, 0usize, 0usize, 0usize);
        for st in self.requests.values() {
            let c = per_consumer.entry(st.consumer).or_default();
            c.0 += 1;
            let ok = st.delivered.is_some();
            match st.home {
                Some(true) => {
                    home_req += 1;
                    home_ok += ok as usize;
                }
                Some(false) => {
                    foreign_req += 1;
                    foreign_ok += ok as usize;
                }
                None => {}
            }
            match st.delivered {
                Some((t, h)) => {
                    c.1 += 1;
                    delays.push(t - st.time);
                    hops.push(h);
                    delivery_times.push(Some(t));
                }
                None => delivery_times.push(None),
            }
        }
        let requests = self.requests.len();
        let delivered = delays.len();
        let ratio = |ok: usize, n: usize| (n > 0).then(|| ok as f64 / n as f64);
        MetricsReport {
            run: labels.run,
            seed: labels.seed,
            protocol: labels.protocol,
            cache: labels.cache,
            retrans: labels.retrans,
            requests,
            delivered,
            delivery_rate: ratio(delivered, requests).unwrap_or(0.0),
            delivery_rate_home: ratio(home_ok, home_req),
            delivery_rate_foreign: ratio(foreign_ok, foreign_req),
            delay_mean: mean(&delays),
            delay_median: median(&delays),
            hops_mean: mean(&hops.iter().map(|&h| f64::from(h)).collect::<Vec<_>>()),
            bytes_interest: self.bytes_interest,
            bytes_data: self.bytes_data,
            bytes_control: self.bytes_control,
            duplicates: self.duplicates,
            receptions: self.receptions,
            cache_initial,
            cache_final,
            cache_util_pct: cache_utilization(cache_initial, cache_final).ok(),
            per_consumer: per_consumer.into_iter().map(|(n, (r, d))| (n.0, r, d)).collect(),
            delays,
            hops,
            delivery_times,
            max_live_interest_copies: 0,
        }
    }
}

/// Identification of a run inside a batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunLabels {
    pub run: usize,
    pub seed: u64,
    pub protocol: String,
    pub cache: bool,
    pub retrans: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub run: usize,
    pub seed: u64,
    pub protocol: String,
    pub cache: bool,
    pub retrans: bool,
    pub requests: usize,
    pub delivered: usize,
    pub delivery_rate: f64,
    pub delivery_rate_home: Option<f64>,
    pub delivery_rate_foreign: Option<f64>,
    pub delay_mean: Option<f64>,
    pub delay_median: Option<f64>,
    pub hops_mean: Option<f64>,
    pub bytes_interest: u64,
    pub bytes_data: u64,
    pub bytes_control: u64,
    pub duplicates: u64,
    /// Data receptions at requesting nodes, counted per satisfied request.
    pub receptions: u64,
    pub cache_initial: usize,
    pub cache_final: usize,
    pub cache_util_pct: Option<f64>,
    /// `(consumer, requests, delivered)`
    pub per_consumer: Vec<(u32, usize, usize)>,
    #[serde(skip)]
    pub delays: Vec<f64>,
    #[serde(skip)]
    pub hops: Vec<u32>,
    /// Delivery time per request id, `None` if undelivered.
    #[serde(skip)]
    pub delivery_times: Vec<Option<f64>>,
    /// Largest number of live copies of one Interest instance seen by the
    /// engine's invariant scan (0 when the scan is off).
    pub max_live_interest_copies: usize,
}

impl MetricsReport {
    pub fn bytes_total(&self) -> u64 {
        self.bytes_interest + self.bytes_data + self.bytes_control
    }

    /// Routing traffic in bytes per second per node.
    pub fn control_rate_per_node(&self, n_nodes: usize, duration: f64) -> f64 {
        self.bytes_control as f64 / n_nodes as f64 / duration
    }
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    })
}

/// Mean and half-width of the Student-t 95% confidence interval. The
/// interval is omitted for fewer than two samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: Option<f64>,
    pub ci95: Option<f64>,
}

pub fn mean_ci95(xs: &[f64]) -> Stat {
    let n = xs.len();
    let m = mean(xs);
    let ci95 = match (n, m) {
        (n, Some(m)) if n >= 2 => {
            let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
                .expect("positive degrees of freedom")
                .inverse_cdf(0.975);
            Some(t * var.sqrt() / (n as f64).sqrt())
        }
        _ => None,
    };
    Stat { mean: m, ci95 }
}

type Index = (&'static str, fn(&MetricsReport) -> Option<f64>);

/// Reported indices in CSV column order.
pub const INDICES: [Index; 11] = [
    ("delivery_rate", |r| Some(r.delivery_rate)),
    ("delivery_home", |r| r.delivery_rate_home),
    ("delivery_foreign", |r| r.delivery_rate_foreign),
    ("delay_mean_s", |r| r.delay_mean),
    ("delay_median_s", |r| r.delay_median),
    ("bytes_interest", |r| Some(r.bytes_interest as f64)),
    ("bytes_data", |r| Some(r.bytes_data as f64)),
    ("bytes_control", |r| Some(r.bytes_control as f64)),
    ("hops_mean", |r| r.hops_mean),
    ("duplicates", |r| Some(r.duplicates as f64)),
    ("cache_util_pct", |r| r.cache_util_pct),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub runs: usize,
    pub protocol: String,
    pub cache: bool,
    pub retrans: bool,
    /// `(index name, stat)` in CSV column order.
    pub indices: Vec<(String, Stat)>,
}

impl Aggregate {
    pub fn from_reports(reports: &[MetricsReport]) -> Self {
        let first = reports.first();
        Aggregate {
            runs: reports.len(),
            protocol: first.map(|r| r.protocol.clone()).unwrap_or_default(),
            cache: first.is_some_and(|r| r.cache),
            retrans: first.is_some_and(|r| r.retrans),
            indices: INDICES
                .iter()
                .map(|(name, f)| {
                    let xs: Vec<f64> = reports.iter().filter_map(f).collect();
                    (name.to_string(), mean_ci95(&xs))
                })
                .collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<Stat> {
        self.indices.iter().find(|(n, _)| n == name).map(|(_, s)| *s)
    }
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn csv_header() -> String {
    let mut h = String::from("run,protocol,cache,retrans");
    for (name, _) in INDICES {
        h.push(',');
        h.push_str(name);
    }
    for (name, _) in INDICES {
        let _ = write!(h, ",{name}_ci95");
    }
    h
}

/// One row per run followed by the `AGG` row.
pub fn to_csv(reports: &[MetricsReport]) -> String {
    let mut out = csv_header();
    out.push('\n');
    let blanks = ",".repeat(INDICES.len());
    for r in reports {
        let _ = write!(
            out,
            "{},{},{},{}",
            r.run,
            r.protocol,
            on_off(r.cache),
            on_off(r.retrans)
        );
        for (_, f) in INDICES {
            let _ = write!(out, ",{}", opt(f(r)));
        }
        out.push_str(&blanks);
        out.push('\n');
    }
    let agg = Aggregate::from_reports(reports);
    let _ = write!(
        out,
        "AGG,{},{},{}",
        agg.protocol,
        on_off(agg.cache),
        on_off(agg.retrans)
    );
    for (_, s) in &agg.indices {
        let _ = write!(out, ",{}", opt(s.mean));
    }
    for (_, s) in &agg.indices {
        let _ = write!(out, ",{}", opt(s.ci95));
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> RunLabels {
        RunLabels {
            run: 0,
            seed: 1,
            protocol: "mobccn".into(),
            cache: false,
            retrans: true,
        }
    }

    fn req(id: u64, time: f64, consumer: u32, t: u32, home: Option<bool>) -> Request {
        Request {
            id,
            time,
            consumer: NodeId(consumer),
            name: ContentName::new(t, 0),
            home,
        }
    }

    #[test]
    fn cache_utilization_examples() {
        assert_eq!(cache_utilization(60, 210).unwrap(), 250.0);
        assert_eq!(cache_utilization(60, 1800).unwrap(), 2900.0);
        assert_eq!(cache_utilization(60, 60).unwrap(), 0.0);
        assert!(matches!(cache_utilization(0, 10), Err(SimError::EmptyInitialCache)));
    }

    #[test]
    fn delivery_then_duplicate() {
        let mut c = Collector::new(SizeModel::default());
        c.register_request(&req(0, 100.0, 1, 2, None));
        assert!(c.record_delivery(0, 400.0, 2).unwrap());
        assert!(!c.record_delivery(0, 500.0, 3).unwrap());
        assert!(matches!(c.record_delivery(9, 1.0, 0), Err(SimError::UnknownRequest(9))));
        let r = c.finish(labels(), 1, 1);
        assert_eq!(r.delays, vec![300.0]);
        assert_eq!(r.hops, vec![2]);
        assert_eq!(r.duplicates, 1);
        assert_eq!(r.delivered as u64 + r.duplicates, r.receptions);
    }

    #[test]
    fn local_hit_has_zero_delay_and_hops() {
        let mut c = Collector::new(SizeModel::default());
        c.register_request(&req(0, 50.0, 1, 2, None));
        assert_eq!(c.deliver_local(NodeId(1), ContentName::new(2, 0), 50.0, 0).unwrap(), 1);
        let r = c.finish(labels(), 1, 1);
        assert_eq!(r.delay_mean, Some(0.0));
        assert_eq!(r.hops_mean, Some(0.0));
    }

    #[test]
    fn unmatched_delivery_is_an_error() {
        let mut c = Collector::new(SizeModel::default());
        assert!(matches!(
            c.deliver_local(NodeId(3), ContentName::new(0, 0), 1.0, 1),
            Err(SimError::UnmatchedDelivery { .. })
        ));
        c.register_request(&req(0, 0.0, 3, 0, None));
        c.deliver_local(NodeId(3), ContentName::new(0, 0), 1.0, 1).unwrap();
        assert_eq!(c.deliver_local(NodeId(3), ContentName::new(0, 0), 2.0, 1).unwrap(), 0);
        assert_eq!(c.duplicates(), 1);
        assert!(!c.redundant_arrival(NodeId(4), ContentName::new(0, 0)));
    }

    #[test]
    fn transmission_classes() {
        let mut c = Collector::new(SizeModel::default());
        let hello = Packet::Hello {
            records: vec![
                crate::model::HelloRecord {
                    content_type: 0,
                    advertised_utility: 1.0,
                    stored_locally: true
                };
                10
            ],
        };
        c.record_transmission(&hello);
        c.record_transmission(&Packet::Interest {
            name: ContentName::new(0, 0),
            origin: NodeId(0),
            nonce: 0,
        });
        c.record_transmission(&Packet::Data {
            name: ContentName::new(0, 0),
            payload_bytes: 1024,
        });
        assert_eq!(c.bytes(), (16, 1040, 98));
    }

    #[test]
    fn home_foreign_recombine() {
        let mut c = Collector::new(SizeModel::default());
        for i in 0..4 {
            c.register_request(&req(i, 0.0, 1, i as u32, Some(i % 2 == 0)));
        }
        c.record_delivery(0, 1.0, 1).unwrap();
        c.record_delivery(1, 1.0, 1).unwrap();
        c.record_delivery(2, 1.0, 1).unwrap();
        let r = c.finish(labels(), 1, 1);
        assert_eq!(r.delivery_rate_home, Some(1.0));
        assert_eq!(r.delivery_rate_foreign, Some(0.5));
        let recombined = (r.delivery_rate_home.unwrap() * 2.0 + r.delivery_rate_foreign.unwrap() * 2.0) / 4.0;
        assert_eq!(recombined, r.delivery_rate);
        assert_eq!(r.delivery_times, vec![Some(1.0), Some(1.0), Some(1.0), None]);
    }

    #[test]
    fn student_t_interval() {
        let s = mean_ci95(&[0.6, 0.8]);
        assert!((s.mean.unwrap() - 0.7).abs() < 1e-12);
        assert!((s.ci95.unwrap() - 1.2706).abs() < 1e-3);

        assert_eq!(mean_ci95(&[0.5, 0.5, 0.5]).ci95, Some(0.0));
        assert_eq!(
            mean_ci95(&[0.5]),
            Stat {
                mean: Some(0.5),
                ci95: None
            }
        );
        assert_eq!(mean_ci95(&[]), Stat { mean: None, ci95: None });
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn csv_rows() {
        let mut reports = Vec::new();
        for run in 0..3 {
            let mut c = Collector::new(SizeModel::default());
            c.register_request(&req(0, 0.0, 1, 0, None));
            let mut l = labels();
            l.run = run;
            reports.push(c.finish(l, 60, 210));
        }
        let csv = to_csv(&reports);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with(
            "run,protocol,cache,retrans,delivery_rate,delivery_home,delivery_foreign,delay_mean_s,delay_median_s,\
             bytes_interest,bytes_data,bytes_control,hops_mean,duplicates,cache_util_pct,delivery_rate_ci95"
        ));
        assert!(lines[4].starts_with("AGG,mobccn,off,on,0,"));
        let cols = lines[0].split(',').count();
        assert!(lines.iter().all(|l| l.split(',').count() == cols));
        assert!(lines[1].contains(",250,"));
    }
}
