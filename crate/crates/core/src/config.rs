//! Scenario configuration: a flat `key = value` text format with `#`
//! comments, two bundled presets and cross-field validation.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::mobccn::{IctEstimatorKind, RetransmissionPolicy, RoutingParams, UtilityMemory};
use crate::mobility::MobilityConfig;
use crate::model::SizeModel;
use crate::workload::{InterRequest, PlacementKind, RequestTiming, TrafficConfig};

pub const SCENARIO_A: &str = include_str!("../presets/scenario_a.conf");
pub const SCENARIO_B: &str = include_str!("../presets/scenario_b.conf");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProtocolKind {
    MobCcn,
    IdealEpidemic,
    Epi1Copy,
}

impl ProtocolKind {
    pub fn base_name(self) -> &'static str {
        match self {
            ProtocolKind::MobCcn => "mobccn",
            ProtocolKind::IdealEpidemic => "epidemic_ideal",
            ProtocolKind::Epi1Copy => "epi1copy",
        }
    }
}

/// Parses a protocol name. The `_noretrans` variants return
/// `Some(false)` as forced retransmission setting.
pub fn parse_protocol(s: &str) -> Option<(ProtocolKind, Option<bool>)> {
    Some(match s {
        "mobccn" => (ProtocolKind::MobCcn, None),
        "mobccn_noretrans" => (ProtocolKind::MobCcn, Some(false)),
        "epidemic_ideal" => (ProtocolKind::IdealEpidemic, None),
        "epi1copy" => (ProtocolKind::Epi1Copy, None),
        "epi1copy_noretrans" => (ProtocolKind::Epi1Copy, Some(false)),
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InterRequestLaw {
    Geometric,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub name: String,

    pub n_nodes: usize,
    pub n_communities: usize,
    pub n_travellers: usize,
    pub area_side: f64,
    pub tx_range: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub duration: f64,
    pub tick: f64,
    pub burn_in: f64,
    pub traveller_foreign_prob: f64,

    pub n_producers: usize,
    pub n_consumers: usize,
    pub n_content_types: u32,
    pub chunks_per_type: u32,
    pub requests_per_consumer: usize,
    pub inter_request: InterRequestLaw,
    pub inter_request_mean: f64,
    pub request_timing: RequestTiming,
    pub placement: PlacementKind,
    pub home_fraction: f64,
    pub warmup_end: f64,
    pub request_end: f64,
    pub payload_bytes: u32,
    pub max_resample: u32,

    pub protocol: ProtocolKind,
    pub caching: bool,
    pub retransmission: bool,
    pub retransmission_threshold: u32,
    pub forward_prob: f64,
    pub u_cap: f64,
    pub ict_init: f64,
    pub ict_estimator: IctEstimatorKind,
    pub utility_memory: UtilityMemory,
    pub initial_utility: f64,
    pub avoid_breadcrumb_faces: bool,

    pub hello_header_bytes: u64,
    pub hello_record_bytes: u64,
    pub interest_bytes: u64,
    pub data_header_bytes: u64,

    pub n_runs: usize,
    pub base_seed: u64,
    pub output_dir: String,
    pub check_invariants: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig::preset("scenario_a").expect("bundled preset parses")
    }
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| SimError::config(key, format!("cannot parse `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err(SimError::config(key, format!("expected on or off, got `{v}`"))),
    }
}

impl ScenarioConfig {
    /// Bundled presets: `scenario_a`, `scenario_b`.
    pub fn preset(name: &str) -> Result<Self> {
        let text = match name {
            "scenario_a" => SCENARIO_A,
            "scenario_b" => SCENARIO_B,
            _ => return Err(SimError::config("preset", format!("unknown preset `{name}`"))),
        };
        Self::parse_onto(Self::blank(), text)
    }

    /// Reads a file, or a bundled preset when `path` names one and no such
    /// file exists.
    pub fn load(path: &str) -> Result<Self> {
        if !Path::new(path).exists() {
            if let Ok(c) = Self::preset(path) {
                return Ok(c);
            }
        }
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Keys missing from `text` keep the `scenario_a` value.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_onto(Self::default(), text)
    }

    fn blank() -> Self {
        ScenarioConfig {
            name: String::new(),
            n_nodes: 0,
            n_communities: 0,
            n_travellers: 0,
            area_side: 0.0,
            tx_range: 0.0,
            speed_min: 0.0,
            speed_max: 0.0,
            duration: 0.0,
            tick: 0.0,
            burn_in: 0.0,
            traveller_foreign_prob: 0.0,
            n_producers: 0,
            n_consumers: 0,
            n_content_types: 0,
            chunks_per_type: 0,
            requests_per_consumer: 0,
            inter_request: InterRequestLaw::Geometric,
            inter_request_mean: 0.0,
            request_timing: RequestTiming::Offset,
            placement: PlacementKind::Uniform,
            home_fraction: 0.0,
            warmup_end: 0.0,
            request_end: 0.0,
            payload_bytes: 0,
            max_resample: 0,
            protocol: ProtocolKind::MobCcn,
            caching: false,
            retransmission: false,
            retransmission_threshold: 0,
            forward_prob: 0.0,
            u_cap: 0.0,
            ict_init: 0.0,
            ict_estimator: IctEstimatorKind::Mean,
            utility_memory: UtilityMemory::History,
            initial_utility: 0.0,
            avoid_breadcrumb_faces: false,
            hello_header_bytes: 0,
            hello_record_bytes: 0,
            interest_bytes: 0,
            data_header_bytes: 0,
            n_runs: 0,
            base_seed: 0,
            output_dir: String::new(),
            check_invariants: false,
        }
    }

    fn parse_onto(mut cfg: Self, text: &str) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        let mut forced_retrans: Option<bool> = None;
        let mut explicit_retrans: Option<bool> = None;
        let mut ewma_weight: Option<f64> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(SimError::config(format!("line {}", i + 1), "expected `key = value`"));
            };
            let (k, v) = (k.trim(), v.trim());
            if !seen.insert(k.to_string()) {
                return Err(SimError::config(k, "given twice"));
            }
            match k {
                "name" => cfg.name = v.to_string(),
                "n_nodes" => cfg.n_nodes = parse_num(k, v)?,
                "n_communities" => cfg.n_communities = parse_num(k, v)?,
                "n_travellers" => cfg.n_travellers = parse_num(k, v)?,
                "area_side" => cfg.area_side = parse_num(k, v)?,
                "tx_range" => cfg.tx_range = parse_num(k, v)?,
                "speed_min" => cfg.speed_min = parse_num(k, v)?,
                "speed_max" => cfg.speed_max = parse_num(k, v)?,
                "duration" => cfg.duration = parse_num(k, v)?,
                "tick" => cfg.tick = parse_num(k, v)?,
                "burn_in" => cfg.burn_in = parse_num(k, v)?,
                "traveller_foreign_prob" => cfg.traveller_foreign_prob = parse_num(k, v)?,
                "n_producers" => cfg.n_producers = parse_num(k, v)?,
                "n_consumers" => cfg.n_consumers = parse_num(k, v)?,
                "n_content_types" => cfg.n_content_types = parse_num(k, v)?,
                "chunks_per_type" => cfg.chunks_per_type = parse_num(k, v)?,
                "requests_per_consumer" => cfg.requests_per_consumer = parse_num(k, v)?,
                "inter_request" => {
                    cfg.inter_request = match v {
                        "geometric" => InterRequestLaw::Geometric,
                        "exponential" => InterRequestLaw::Exponential,
                        _ => return Err(SimError::config(k, "expected geometric or exponential")),
                    }
                }
                "inter_request_mean" => cfg.inter_request_mean = parse_num(k, v)?,
                "request_timing" => {
                    cfg.request_timing = match v {
                        "offset" => RequestTiming::Offset,
                        "renewal" => RequestTiming::Renewal,
                        _ => return Err(SimError::config(k, "expected offset or renewal")),
                    }
                }
                "placement" => {
                    cfg.placement = match v {
                        "uniform" => PlacementKind::Uniform,
                        "balanced" => PlacementKind::Balanced,
                        _ => return Err(SimError::config(k, "expected uniform or balanced")),
                    }
                }
                "home_fraction" => cfg.home_fraction = parse_num(k, v)?,
                "warmup_end" => cfg.warmup_end = parse_num(k, v)?,
                "request_end" => cfg.request_end = parse_num(k, v)?,
                "payload_bytes" => cfg.payload_bytes = parse_num(k, v)?,
                "max_resample" => cfg.max_resample = parse_num(k, v)?,
                "protocol" => {
                    let (kind, forced) =
                        parse_protocol(v).ok_or_else(|| SimError::config(k, format!("unknown protocol `{v}`")))?;
                    cfg.protocol = kind;
                    forced_retrans = forced;
                }
                "caching" => cfg.caching = parse_bool(k, v)?,
                "retransmission" => explicit_retrans = Some(parse_bool(k, v)?),
                "retransmission_threshold" => cfg.retransmission_threshold = parse_num(k, v)?,
                "forward_prob" => cfg.forward_prob = parse_num(k, v)?,
                "u_cap" => cfg.u_cap = parse_num(k, v)?,
                "ict_init" => cfg.ict_init = parse_num(k, v)?,
                "ict_estimator" => {
                    cfg.ict_estimator = match v {
                        "mean" => IctEstimatorKind::Mean,
                        "ewma" => IctEstimatorKind::Ewma(0.5),
                        _ => return Err(SimError::config(k, "expected mean or ewma")),
                    }
                }
                "utility_memory" => {
                    cfg.utility_memory = match v {
                        "history" => UtilityMemory::History,
                        "current" => UtilityMemory::Current,
                        _ => return Err(SimError::config(k, "expected history or current")),
                    }
                }
                "ewma_weight" => ewma_weight = Some(parse_num(k, v)?),
                "initial_utility" => cfg.initial_utility = parse_num(k, v)?,
                "avoid_breadcrumb_faces" => cfg.avoid_breadcrumb_faces = parse_bool(k, v)?,
                "hello_header_bytes" => cfg.hello_header_bytes = parse_num(k, v)?,
                "hello_record_bytes" => cfg.hello_record_bytes = parse_num(k, v)?,
                "interest_bytes" => cfg.interest_bytes = parse_num(k, v)?,
                "data_header_bytes" => cfg.data_header_bytes = parse_num(k, v)?,
                "n_runs" => cfg.n_runs = parse_num(k, v)?,
                "base_seed" => cfg.base_seed = parse_num(k, v)?,
                "output_dir" => cfg.output_dir = v.to_string(),
                "check_invariants" => cfg.check_invariants = parse_bool(k, v)?,
                _ => return Err(SimError::config(k, "unknown key")),
            }
        }
        match (forced_retrans, explicit_retrans) {
            (Some(false), Some(true)) => {
                return Err(SimError::config(
                    "retransmission",
                    "conflicts with a _noretrans protocol name",
                ))
            }
            (Some(f), _) => cfg.retransmission = f,
            (None, Some(e)) => cfg.retransmission = e,
            (None, None) => {}
        }
        if let Some(w) = ewma_weight {
            match cfg.ict_estimator {
                IctEstimatorKind::Ewma(_) => cfg.ict_estimator = IctEstimatorKind::Ewma(w),
                IctEstimatorKind::Mean => {
                    return Err(SimError::config("ewma_weight", "only valid with ict_estimator = ewma"))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies a protocol name as given on the command line.
    pub fn set_protocol(&mut self, name: &str) -> Result<()> {
        let (kind, forced) =
            parse_protocol(name).ok_or_else(|| SimError::config("protocol", format!("unknown protocol `{name}`")))?;
        self.protocol = kind;
        if let Some(f) = forced {
            self.retransmission = f;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, m: &str| Err(SimError::config(k, m));
        if self.n_nodes == 0 {
            return bad("n_nodes", "must be positive");
        }
        if self.n_communities == 0 || self.n_communities > self.n_nodes {
            return bad("n_communities", "must be between 1 and n_nodes");
        }
        if self.n_travellers > self.n_communities {
            return bad("n_travellers", "at most one traveller per community");
        }
        if self.n_producers + self.n_consumers > self.n_nodes {
            return bad("n_consumers", "producers + consumers exceed n_nodes");
        }
        if self.n_consumers > 0 && self.n_producers == 0 {
            return bad("n_producers", "consumers need at least one producer");
        }
        let positive = [
            ("area_side", self.area_side),
            ("tx_range", self.tx_range),
            ("speed_min", self.speed_min),
            ("duration", self.duration),
            ("tick", self.tick),
            ("inter_request_mean", self.inter_request_mean),
            ("u_cap", self.u_cap),
            ("ict_init", self.ict_init),
            ("initial_utility", self.initial_utility),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(k, "must be a positive number");
            }
        }
        if !(self.speed_max >= self.speed_min && self.speed_max.is_finite()) {
            return bad("speed_max", "must be at least speed_min");
        }
        if !(self.burn_in >= 0.0 && self.burn_in.is_finite()) {
            return bad("burn_in", "must be non-negative");
        }
        for (k, v) in [
            ("traveller_foreign_prob", self.traveller_foreign_prob),
            ("home_fraction", self.home_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(k, "must lie in [0, 1]");
            }
        }
        if !(self.forward_prob > 0.0 && self.forward_prob <= 1.0) {
            return bad("forward_prob", "must lie in (0, 1]");
        }
        if self.n_content_types == 0 {
            return bad("n_content_types", "must be positive");
        }
        if self.chunks_per_type == 0 {
            return bad("chunks_per_type", "must be positive");
        }
        if self.requests_per_consumer == 0 {
            return bad("requests_per_consumer", "must be positive");
        }
        if self.inter_request == InterRequestLaw::Geometric && self.inter_request_mean < 1.0 {
            return bad("inter_request_mean", "a geometric law needs a mean of at least 1 s");
        }
        if self.warmup_end.is_nan() || self.warmup_end < 0.0 {
            return bad("warmup_end", "must be non-negative");
        }
        if self.request_end.is_nan() || self.warmup_end >= self.request_end {
            return bad("request_end", "must be after warmup_end");
        }
        if self.request_end > self.duration {
            return bad("request_end", "must not exceed duration");
        }
        if self.retransmission_threshold < 2 {
            return bad("retransmission_threshold", "must be at least 2");
        }
        if let IctEstimatorKind::Ewma(w) = self.ict_estimator {
            if !(w > 0.0 && w <= 1.0) {
                return bad("ewma_weight", "must lie in (0, 1]");
            }
        }
        if self.n_runs == 0 {
            return bad("n_runs", "must be positive");
        }
        if self.max_resample == 0 {
            return bad("max_resample", "must be positive");
        }
        crate::workload::Roles::assign(
            self.n_nodes,
            self.n_communities,
            self.n_producers,
            self.n_consumers,
            self.n_travellers,
        )?;
        Ok(())
    }

    pub fn protocol_label(&self) -> String {
        match (self.protocol, self.retransmission) {
            (ProtocolKind::IdealEpidemic, _) => "epidemic_ideal".to_string(),
            (p, true) => p.base_name().to_string(),
            (p, false) => format!("{}_noretrans", p.base_name()),
        }
    }

    pub fn mobility(&self) -> MobilityConfig {
        MobilityConfig {
            area_side: self.area_side,
            n_nodes: self.n_nodes,
            n_communities: self.n_communities,
            tx_range: self.tx_range,
            speed_min: self.speed_min,
            speed_max: self.speed_max,
            duration: self.duration,
            tick: self.tick,
            burn_in: self.burn_in,
            foreign_prob: self.traveller_foreign_prob,
        }
    }

    pub fn traffic(&self) -> TrafficConfig {
        TrafficConfig {
            n_content_types: self.n_content_types,
            chunks_per_type: self.chunks_per_type,
            requests_per_consumer: self.requests_per_consumer,
            inter_request: match self.inter_request {
                InterRequestLaw::Geometric => InterRequest::Geometric {
                    mean_s: self.inter_request_mean,
                },
                InterRequestLaw::Exponential => InterRequest::Exponential {
                    mean_s: self.inter_request_mean,
                },
            },
            timing: self.request_timing,
            placement: self.placement,
            home_fraction: self.home_fraction,
            warmup_end: self.warmup_end,
            request_end: self.request_end,
            payload_bytes: self.payload_bytes,
            max_resample: self.max_resample,
        }
    }

    pub fn routing(&self) -> RoutingParams {
        RoutingParams {
            u_cap: self.u_cap,
            ict_init: self.ict_init,
            estimator: self.ict_estimator,
            memory: self.utility_memory,
        }
    }

    pub fn retransmission_policy(&self) -> RetransmissionPolicy {
        RetransmissionPolicy::new(self.retransmission, self.retransmission_threshold)
    }

    pub fn sizes(&self) -> SizeModel {
        SizeModel {
            hello_header: self.hello_header_bytes,
            hello_record: self.hello_record_bytes,
            interest: self.interest_bytes,
            data_header: self.data_header_bytes,
        }
    }
}

impl fmt::Display for ScenarioConfig {
    /// Serialises every key; parsing the output yields an equal config.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let _ = writeln!(s, "name = {}", self.name);
        s.push_str("\n# mobility\n");
        let _ = writeln!(s, "n_nodes = {}", self.n_nodes);
        let _ = writeln!(s, "n_communities = {}", self.n_communities);
        let _ = writeln!(s, "n_travellers = {}", self.n_travellers);
        let _ = writeln!(s, "area_side = {}", self.area_side);
        let _ = writeln!(s, "tx_range = {}", self.tx_range);
        let _ = writeln!(s, "speed_min = {}", self.speed_min);
        let _ = writeln!(s, "speed_max = {}", self.speed_max);
        let _ = writeln!(s, "duration = {}", self.duration);
        let _ = writeln!(s, "tick = {}", self.tick);
        let _ = writeln!(s, "burn_in = {}", self.burn_in);
        let _ = writeln!(s, "traveller_foreign_prob = {}", self.traveller_foreign_prob);
        s.push_str("\n# traffic\n");
        let _ = writeln!(s, "n_producers = {}", self.n_producers);
        let _ = writeln!(s, "n_consumers = {}", self.n_consumers);
        let _ = writeln!(s, "n_content_types = {}", self.n_content_types);
        let _ = writeln!(s, "chunks_per_type = {}", self.chunks_per_type);
        let _ = writeln!(s, "requests_per_consumer = {}", self.requests_per_consumer);
        let law = match self.inter_request {
            InterRequestLaw::Geometric => "geometric",
            InterRequestLaw::Exponential => "exponential",
        };
        let _ = writeln!(s, "inter_request = {law}");
        let _ = writeln!(s, "inter_request_mean = {}", self.inter_request_mean);
        let timing = match self.request_timing {
            RequestTiming::Offset => "offset",
            RequestTiming::Renewal => "renewal",
        };
        let _ = writeln!(s, "request_timing = {timing}");
        let placement = match self.placement {
            PlacementKind::Uniform => "uniform",
            PlacementKind::Balanced => "balanced",
        };
        let _ = writeln!(s, "placement = {placement}");
        let _ = writeln!(s, "home_fraction = {}", self.home_fraction);
        let _ = writeln!(s, "warmup_end = {}", self.warmup_end);
        let _ = writeln!(s, "request_end = {}", self.request_end);
        let _ = writeln!(s, "payload_bytes = {}", self.payload_bytes);
        let _ = writeln!(s, "max_resample = {}", self.max_resample);
        s.push_str("\n# protocol\n");
        let _ = writeln!(s, "protocol = {}", self.protocol.base_name());
        let _ = writeln!(s, "caching = {}", on_off(self.caching));
        let _ = writeln!(s, "retransmission = {}", on_off(self.retransmission));
        let _ = writeln!(s, "retransmission_threshold = {}", self.retransmission_threshold);
        let _ = writeln!(s, "forward_prob = {}", self.forward_prob);
        let _ = writeln!(s, "u_cap = {}", self.u_cap);
        let _ = writeln!(s, "ict_init = {}", self.ict_init);
        match self.ict_estimator {
            IctEstimatorKind::Mean => {
                let _ = writeln!(s, "ict_estimator = mean");
            }
            IctEstimatorKind::Ewma(w) => {
                let _ = writeln!(s, "ict_estimator = ewma");
                let _ = writeln!(s, "ewma_weight = {w}");
            }
        }
        let memory = match self.utility_memory {
            UtilityMemory::History => "history",
            UtilityMemory::Current => "current",
        };
        let _ = writeln!(s, "utility_memory = {memory}");
        let _ = writeln!(s, "initial_utility = {}", self.initial_utility);
        let _ = writeln!(s, "avoid_breadcrumb_faces = {}", on_off(self.avoid_breadcrumb_faces));
        s.push_str("\n# packet sizes (bytes)\n");
        let _ = writeln!(s, "hello_header_bytes = {}", self.hello_header_bytes);
        let _ = writeln!(s, "hello_record_bytes = {}", self.hello_record_bytes);
        let _ = writeln!(s, "interest_bytes = {}", self.interest_bytes);
        let _ = writeln!(s, "data_header_bytes = {}", self.data_header_bytes);
        s.push_str("\n# runs\n");
        let _ = writeln!(s, "n_runs = {}", self.n_runs);
        let _ = writeln!(s, "base_seed = {}", self.base_seed);
        let _ = writeln!(s, "output_dir = {}", self.output_dir);
        let _ = writeln!(s, "check_invariants = {}", on_off(self.check_invariants));
        f.write_str(&s)
    }
}
