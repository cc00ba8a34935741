//! `oppsim`: batch runs, trace generation and trace replay.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oppsim::config::parse_protocol;
use oppsim::metrics::{to_csv, Aggregate, MetricsReport};
use oppsim::mobility::{read_trace, write_trace};
use oppsim::scenario::{multi_run, prepare, replay_inputs, run_prepared};
use oppsim::workload::write_workload;
use oppsim::{ScenarioConfig, SimError};
use serde_json::json;

#[derive(Parser)]
#[command(name = "oppsim", version, about = "Content retrieval over opportunistic networks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run seeded simulations and write metrics.csv and summary.json.
    Run {
        #[command(flatten)]
        opts: RunOpts,
        /// Number of runs (overrides n_runs).
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Write the contact trace (and optionally the request workload) of one run.
    GenTrace {
        /// Config file or preset name.
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workload: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        run: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one simulation on a stored trace and workload.
    Replay {
        #[command(flatten)]
        opts: RunOpts,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        workload: PathBuf,
        /// Run index the files were generated for.
        #[arg(long, default_value_t = 0)]
        run: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct RunOpts {
    /// Config file or preset name.
    #[arg(long)]
    config: String,
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    cache: Option<Switch>,
    #[arg(long)]
    retrans: Option<Switch>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn load(path: &str, seed: Option<u64>) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::load(path).map_err(|e| match e {
        SimError::Io(io) => Failure::Validation(format!("{path}: {io}")),
        e => e.into(),
    })?;
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    Ok(cfg)
}

fn configure(opts: &RunOpts) -> Result<ScenarioConfig, Failure> {
    let mut cfg = load(&opts.config, opts.seed)?;
    if let Some(p) = &opts.protocol {
        let (_, forced) = parse_protocol(p).ok_or_else(|| Failure::Validation(format!("unknown protocol `{p}`")))?;
        if forced == Some(false) && matches!(opts.retrans, Some(Switch::On)) {
            return Err(Failure::Validation(format!("--retrans on contradicts protocol `{p}`")));
        }
        cfg.set_protocol(p)?;
    }
    if let Some(c) = opts.cache {
        cfg.caching = matches!(c, Switch::On);
    }
    if let Some(r) = opts.retrans {
        cfg.retransmission = matches!(r, Switch::On);
    }
    if let Some(out) = &opts.out {
        cfg.output_dir = out.display().to_string();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn threads() -> Result<Option<usize>, Failure> {
    match std::env::var("OPPSIM_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Validation(format!(
                "OPPSIM_THREADS: expected a positive integer, got `{v}`"
            ))),
        },
        Err(_) => Ok(None),
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn summary(cfg: &ScenarioConfig, reports: &[MetricsReport]) -> String {
    let agg = Aggregate::from_reports(reports);
    let indices: serde_json::Map<String, serde_json::Value> = agg
        .indices
        .iter()
        .map(|(k, s)| (k.clone(), json!({ "mean": s.mean, "ci95": s.ci95 })))
        .collect();
    let v = json!({
        "scenario": cfg.name,
        "protocol": agg.protocol,
        "cache": agg.cache,
        "retrans": agg.retrans,
        "base_seed": cfg.base_seed,
        "runs": agg.runs,
        "aggregate": indices,
        "per_run": reports,
    });
    serde_json::to_string_pretty(&v).expect("summary serialises") + "\n"
}

fn emit(cfg: &ScenarioConfig, reports: &[MetricsReport]) -> Result<(), Failure> {
    let dir = PathBuf::from(&cfg.output_dir);
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    write(&dir.join("metrics.csv"), &to_csv(reports))?;
    write(&dir.join("summary.json"), &summary(cfg, reports))?;
    eprintln!(
        "{} {} run(s) of {} written to {}",
        cfg.name,
        reports.len(),
        cfg.protocol_label(),
        dir.display()
    );
    Ok(())
}

fn execute(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Run { opts, runs } => {
            let mut cfg = configure(&opts)?;
            if let Some(n) = runs {
                cfg.n_runs = n;
            }
            cfg.validate()?;
            let reports = multi_run(&cfg, threads()?)?;
            emit(&cfg, &reports)
        }
        Cmd::GenTrace {
            config,
            out,
            workload,
            run,
            seed,
        } => {
            let cfg = load(&config, seed)?;
            cfg.validate()?;
            let inputs = prepare(&cfg, run)?;
            write(&out, &write_trace(&inputs.trace))?;
            if let Some(w) = workload {
                write(&w, &write_workload(&inputs.requests))?;
            }
            Ok(())
        }
        Cmd::Replay {
            opts,
            trace,
            workload,
            run,
        } => {
            let cfg = configure(&opts)?;
            let trace_text = std::fs::read_to_string(&trace).map_err(|e| io_err(&trace, e))?;
            let workload_text = std::fs::read_to_string(&workload).map_err(|e| io_err(&workload, e))?;
            let inputs = replay_inputs(&cfg, run, read_trace(&trace_text)?, &workload_text)?;
            let report = run_prepared(&cfg, run, &inputs, false)?.report;
            emit(&cfg, &[report])
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
