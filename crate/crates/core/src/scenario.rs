//! Wiring of configuration, mobility, workload and protocol into runs.

use rayon::prelude::*;

use crate::config::{ProtocolKind, ScenarioConfig};
use crate::engine::{self, EngineOptions, Protocol, RunOutput, RunSpec};
use crate::epidemic::{IdealEpidemic, OneCopyConfig, OneCopyEpidemic};
use crate::error::{Result, SimError};
use crate::metrics::{MetricsReport, RunLabels};
use crate::mobccn::{MobCcnConfig, MobCcnNetwork};
use crate::mobility::{generate_trace, validate_trace, ContactTrace};
use crate::rng::{run_seed, stream, Stream};
use crate::workload::{generate_requests, place_content, read_workload, Placement, Request, Roles};

/// Everything a run needs besides the protocol.
#[derive(Debug, Clone)]
pub struct RunInputs {
    pub seed: u64,
    pub roles: Roles,
    pub placement: Placement,
    pub trace: ContactTrace,
    pub requests: Vec<Request>,
}

pub fn roles(cfg: &ScenarioConfig) -> Result<Roles> {
    Roles::assign(
        cfg.n_nodes,
        cfg.n_communities,
        cfg.n_producers,
        cfg.n_consumers,
        cfg.n_travellers,
    )
}

/// Roles and content placement for a seed. Placement draws first from the
/// workload stream; the returned generator continues with request times.
pub fn placement(cfg: &ScenarioConfig, seed: u64) -> Result<(Roles, Placement, rand_chacha::ChaCha8Rng)> {
    let roles = roles(cfg)?;
    let mut rng = stream(seed, Stream::Workload);
    let placement = place_content(&cfg.traffic(), &roles, &mut rng);
    Ok((roles, placement, rng))
}

pub fn prepare(cfg: &ScenarioConfig, run_index: usize) -> Result<RunInputs> {
    let seed = run_seed(cfg.base_seed, run_index as u64);
    let (roles, placement, mut wrng) = placement(cfg, seed)?;
    let requests = generate_requests(&cfg.traffic(), &placement, &roles, &mut wrng)?;
    let trace = generate_trace(
        &cfg.mobility(),
        roles.homes(),
        &roles.travellers,
        stream(seed, Stream::Mobility),
    );
    Ok(RunInputs {
        seed,
        roles,
        placement,
        trace,
        requests,
    })
}

/// Inputs for a run from a stored trace and workload. Roles and placement
/// are rebuilt from the configuration and the run seed.
pub fn replay_inputs(cfg: &ScenarioConfig, run_index: usize, trace: ContactTrace, workload: &str) -> Result<RunInputs> {
    let seed = run_seed(cfg.base_seed, run_index as u64);
    let (roles, placement, _) = placement(cfg, seed)?;
    validate_trace(&trace)?;
    let requests = read_workload(workload, &roles, &placement)?;
    Ok(RunInputs {
        seed,
        roles,
        placement,
        trace,
        requests,
    })
}

fn labels(cfg: &ScenarioConfig, run_index: usize, seed: u64) -> RunLabels {
    RunLabels {
        run: run_index,
        seed,
        protocol: cfg.protocol_label(),
        cache: cfg.caching,
        retrans: cfg.retransmission && cfg.protocol != ProtocolKind::IdealEpidemic,
    }
}

/// Runs the configured protocol on prepared inputs.
pub fn run_prepared(cfg: &ScenarioConfig, run_index: usize, inputs: &RunInputs, debug_log: bool) -> Result<RunOutput> {
    let spec = RunSpec {
        n_nodes: cfg.n_nodes,
        duration: cfg.duration,
        trace: &inputs.trace.events,
        requests: &inputs.requests,
        sizes: cfg.sizes(),
        labels: labels(cfg, run_index, inputs.seed),
        options: EngineOptions {
            check_invariants: cfg.check_invariants,
            debug_log,
        },
    };
    let rng = stream(inputs.seed, Stream::Protocol);
    fn go<P: Protocol>(mut p: P, spec: RunSpec<'_>, rng: rand_chacha::ChaCha8Rng) -> Result<RunOutput> {
        engine::run(&mut p, spec, rng)
    }
    match cfg.protocol {
        ProtocolKind::MobCcn => {
            let mc = MobCcnConfig {
                routing: cfg.routing(),
                retransmission: cfg.retransmission_policy(),
                caching: cfg.caching,
                initial_utility: cfg.initial_utility,
                avoid_breadcrumb_faces: cfg.avoid_breadcrumb_faces,
            };
            go(MobCcnNetwork::new(cfg.n_nodes, &inputs.placement, mc), spec, rng)
        }
        ProtocolKind::IdealEpidemic => go(
            IdealEpidemic::new(cfg.n_nodes, &inputs.placement, cfg.caching),
            spec,
            rng,
        ),
        ProtocolKind::Epi1Copy => {
            let oc = OneCopyConfig {
                forward_prob: cfg.forward_prob,
                retransmission: cfg.retransmission,
                caching: cfg.caching,
            };
            go(OneCopyEpidemic::new(cfg.n_nodes, &inputs.placement, oc), spec, rng)
        }
    }
}

pub fn run_one(cfg: &ScenarioConfig, run_index: usize) -> Result<MetricsReport> {
    let inputs = prepare(cfg, run_index)?;
    Ok(run_prepared(cfg, run_index, &inputs, false)?.report)
}

/// Runs `cfg.n_runs` seeded runs, in parallel on up to `threads` workers
/// (all available cores when `None`). Reports come back in run order.
pub fn multi_run(cfg: &ScenarioConfig, threads: Option<usize>) -> Result<Vec<MetricsReport>> {
    cfg.validate()?;
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n.max(1));
    }
    let pool = b.build().map_err(|e| SimError::Runtime(format!("thread pool: {e}")))?;
    pool.install(|| (0..cfg.n_runs).into_par_iter().map(|i| run_one(cfg, i)).collect())
}
