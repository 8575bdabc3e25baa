//! Command-line front end: scenario runs, comparison sweeps, cluster sizing,
//! scenario validation, and cluster-plan generation.
//!
//! Exit codes: 0 success, 2 configuration/validation error, 3 runtime error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use asnsim::cluster::{form_clusters, ClusterPlan, PathLossModel, Position};
use asnsim::mac::TraceSinks;
use asnsim::metrics::{emit_csv, emit_plot_data, RunSummary};
use asnsim::sensing::{
    self, meets_requirement, or_fusion, FusionInput, PerformanceRequirement, SensingParams,
};
use asnsim::{load_scenario, load_sweep, run_scenario, sweep};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "asnsim", version, about = "Acoustic sensor network MAC simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and write its summary (and optional traces).
    Run(RunArgs),
    /// Run a full comparison sweep from a sweep spec file.
    Sweep(SweepArgs),
    /// Evaluate cluster sizing for given false-alarm targets.
    SizeCluster(SizeClusterArgs),
    /// Validate a scenario file, reporting every violation.
    Validate(ValidateArgs),
    /// Form clusters from head and node position files and write the plan.
    Cluster(ClusterArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario TOML file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write an event trace (one line per dispatched event).
    #[arg(long)]
    trace: bool,
    /// Write the per-slot queue trace (proposed scheme).
    #[arg(long)]
    queue_trace: bool,
    /// Also print p50/p90/p99 delay percentiles.
    #[arg(long)]
    percentiles: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep spec TOML file.
    #[arg(long)]
    spec: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SizeClusterArgs {
    /// Maximum global false-alarm probability Qf.
    #[arg(long)]
    qf_max: f64,
    /// Per-node false-alarm probability bound Pf.
    #[arg(long)]
    pf: f64,
    /// Minimum global detection probability Qd to check, if any.
    #[arg(long)]
    qd_min: Option<f64>,
    /// Per-node detection probabilities (comma separated) for the Qd check.
    #[arg(long, value_delimiter = ',')]
    pd: Option<Vec<f64>>,
    /// Cluster plan file: its reported SNRs provide the per-node detection
    /// probabilities (requires --energy-threshold and --samples).
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Energy-detection threshold used with --plan.
    #[arg(long)]
    energy_threshold: Option<f64>,
    /// Samples per decision used with --plan.
    #[arg(long)]
    samples: Option<u32>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    /// Head positions file: one `id x_m y_m` per line.
    #[arg(long)]
    heads: PathBuf,
    /// Node positions file: one `id x_m y_m` per line.
    #[arg(long)]
    nodes: PathBuf,
    /// Communication range in meters.
    #[arg(long)]
    range_m: f64,
    /// Path-loss exponent.
    #[arg(long, default_value_t = 2.0)]
    exponent: f64,
    /// Reference SNR at 1 m, dB.
    #[arg(long, default_value_t = 40.0)]
    snr_ref_db: f64,
    /// Record the minimum cluster size for this global false-alarm bound
    /// (requires --pf).
    #[arg(long)]
    qf_max: Option<f64>,
    /// Per-node false-alarm bound used with --qf-max.
    #[arg(long)]
    pf: Option<f64>,
    /// Output plan file.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::SizeCluster(args) => cmd_size_cluster(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Cluster(args) => cmd_cluster(args),
    }
}

fn config_err(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_CONFIG)
}

fn runtime_err(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_RUNTIME)
}

fn write_summaries(rows: &[RunSummary], out_dir: &Path, base: &str) -> Result<(), String> {
    fs::create_dir_all(out_dir).map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let csv_path = out_dir.join(format!("{base}.csv"));
    let mut csv = Vec::new();
    emit_csv(rows, &mut csv).map_err(|e| e.to_string())?;
    fs::write(&csv_path, csv).map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;
    println!("wrote {}", csv_path.display());

    let plot_path = out_dir.join(format!("{base}.dat"));
    let mut plot = Vec::new();
    emit_plot_data(rows, &mut plot).map_err(|e| e.to_string())?;
    fs::write(&plot_path, plot).map_err(|e| format!("cannot write {}: {e}", plot_path.display()))?;
    println!("wrote {}", plot_path.display());
    Ok(())
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let cfg = match load_scenario(&args.scenario) {
        Ok(cfg) => cfg,
        Err(e) => return config_err(e),
    };
    if let Err(e) = fs::create_dir_all(&args.out) {
        return runtime_err(format!("cannot create {}: {e}", args.out.display()));
    }
    let mut event_trace = if args.trace || cfg.trace {
        match fs::File::create(args.out.join("events.trace")) {
            Ok(f) => Some(std::io::BufWriter::new(f)),
            Err(e) => return runtime_err(e),
        }
    } else {
        None
    };
    let mut queue_trace = if args.queue_trace || cfg.queue_trace {
        match fs::File::create(args.out.join("queues.trace")) {
            Ok(f) => Some(std::io::BufWriter::new(f)),
            Err(e) => return runtime_err(e),
        }
    } else {
        None
    };
    let traces = TraceSinks {
        events: event_trace.as_mut().map(|w| w as &mut dyn Write),
        queues: queue_trace.as_mut().map(|w| w as &mut dyn Write),
    };
    let output = match run_scenario(&cfg, traces) {
        Ok(out) => out,
        Err(e) => return runtime_err(e),
    };
    let s = &output.summary;
    println!(
        "{}: {} packets, avg delay {:.3} ms, avg energy {:.3} uJ, {} pending at end",
        s.scheme, s.packets, s.avg_delay_ms, s.avg_energy_uj, s.pending_at_end
    );
    if args.percentiles {
        match asnsim::metrics::delay_percentiles_ms(&output.outcome.records, &[50.0, 90.0, 99.0]) {
            Ok(p) => println!("delay percentiles: p50 {:.3} ms, p90 {:.3} ms, p99 {:.3} ms", p[0], p[1], p[2]),
            Err(e) => return runtime_err(e),
        }
    }
    if let Err(e) = write_summaries(std::slice::from_ref(s), &args.out, "summary") {
        return runtime_err(e);
    }
    ExitCode::SUCCESS
}

fn cmd_sweep(args: SweepArgs) -> ExitCode {
    let spec = match load_sweep(&args.spec) {
        Ok(spec) => spec,
        Err(e) => return config_err(e),
    };
    let rows = match sweep(&spec) {
        Ok(rows) => rows,
        Err(e) => return runtime_err(e),
    };
    for r in &rows {
        println!(
            "{} N={} ratio={}: delay {:.3} ms, energy {:.3} uJ ({} packets)",
            r.scheme, r.nodes_per_slot, r.ratio, r.avg_delay_ms, r.avg_energy_uj, r.packets
        );
    }
    if let Err(e) = write_summaries(&rows, &args.out, "sweep") {
        return runtime_err(e);
    }
    ExitCode::SUCCESS
}

fn cmd_size_cluster(args: SizeClusterArgs) -> ExitCode {
    let qd_min = args.qd_min.unwrap_or(0.9);
    let req = match PerformanceRequirement::new(qd_min, args.qf_max, args.pf) {
        Ok(req) => req,
        Err(e) => return config_err(e),
    };
    let eq4 = sensing::cluster_size_eq4(&req);
    let search = sensing::max_size_by_search(&req);
    let fused = |s: u32| 1.0 - (1.0 - args.pf).powi(s as i32);

    let verdict = |qf: f64| {
        if qf <= args.qf_max {
            "satisfies 3b"
        } else {
            "violates 3b"
        }
    };
    println!(
        "closed-form size: {eq4} (Qf={:.4}, {})",
        fused(eq4),
        verdict(fused(eq4))
    );
    if search == 0 {
        println!("search size: 0 (a single node already exceeds Qf_max)");
    } else {
        println!(
            "search size: {search} (Qf={:.4}, {})",
            fused(search),
            verdict(fused(search))
        );
    }
    if eq4 != search {
        println!("note: the closed-form ceiling and the constraint search differ; the search value is the largest size satisfying the false-alarm bound");
    }

    // Per-node detection probabilities: explicit list, or derived from a
    // cluster plan's reported SNRs.
    let pd_list: Option<Vec<f64>> = if let Some(pd) = args.pd {
        Some(pd)
    } else if let Some(plan_path) = args.plan {
        let (eps, u) = match (args.energy_threshold, args.samples) {
            (Some(e), Some(u)) => (e, u),
            _ => {
                return config_err(
                    "--plan requires --energy-threshold and --samples to derive detection probabilities",
                )
            }
        };
        let text = match fs::read_to_string(&plan_path) {
            Ok(t) => t,
            Err(e) => return config_err(format!("cannot read {}: {e}", plan_path.display())),
        };
        let plan = match ClusterPlan::from_text(&text) {
            Ok(p) => p,
            Err(e) => return config_err(e),
        };
        let mut pds = Vec::new();
        for (&node, &tenths) in &plan.reported_snrs {
            let gamma = sensing::snr_db_to_linear(tenths as f64 / 10.0);
            let params = match SensingParams::new(gamma, eps, u) {
                Ok(p) => p,
                Err(e) => return config_err(format!("node {node}: {e}")),
            };
            match sensing::node_detection_prob(&params) {
                Ok(pd) => pds.push(pd),
                Err(e) => return runtime_err(format!("node {node}: {e}")),
            }
        }
        Some(pds)
    } else {
        None
    };

    if let Some(pds) = pd_list {
        let fusion = match FusionInput::new(pds) {
            Ok(f) => f,
            Err(e) => return config_err(e),
        };
        let qd = or_fusion(&fusion);
        let qf_at_size = fused(fusion.probs().len() as u32);
        let ok = meets_requirement(qd, qf_at_size, &req);
        println!(
            "supplied {} nodes: Qd={qd:.4} (need >= {qd_min}), Qf={qf_at_size:.4} (need <= {}): {}",
            fusion.probs().len(),
            args.qf_max,
            if ok { "requirement met" } else { "requirement NOT met" }
        );
    }
    ExitCode::SUCCESS
}

fn cmd_validate(args: ValidateArgs) -> ExitCode {
    match load_scenario(&args.scenario) {
        Ok(cfg) => {
            let util = asnsim::traffic::channel_utilization(&cfg.mix);
            println!(
                "ok: scheme {}, {} nodes, channel utilization {util:.3}",
                cfg.scheme,
                cfg.mix.total_nodes()
            );
            ExitCode::SUCCESS
        }
        Err(e) => config_err(e),
    }
}

fn parse_positions(path: &Path) -> Result<Vec<(u16, Position)>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(format!(
                "{}:{}: expected `id x_m y_m`",
                path.display(),
                lineno + 1
            ));
        }
        let id: u16 = fields[0]
            .parse()
            .map_err(|_| format!("{}:{}: bad id", path.display(), lineno + 1))?;
        let x: f64 = fields[1]
            .parse()
            .map_err(|_| format!("{}:{}: bad x", path.display(), lineno + 1))?;
        let y: f64 = fields[2]
            .parse()
            .map_err(|_| format!("{}:{}: bad y", path.display(), lineno + 1))?;
        let pos = Position::from_m(x, y).map_err(|e| format!("{}:{}: {e}", path.display(), lineno + 1))?;
        out.push((id, pos));
    }
    Ok(out)
}

fn cmd_cluster(args: ClusterArgs) -> ExitCode {
    let heads = match parse_positions(&args.heads) {
        Ok(h) => h,
        Err(e) => return config_err(e),
    };
    let nodes = match parse_positions(&args.nodes) {
        Ok(n) => n,
        Err(e) => return config_err(e),
    };
    if args.range_m <= 0.0 {
        return config_err("--range-m must be positive");
    }
    let model = PathLossModel {
        exponent: args.exponent,
        snr_ref_db: args.snr_ref_db,
        d_ref_m: 1.0,
    };
    let mut plan = match form_clusters(&heads, &nodes, args.range_m, &model) {
        Ok(p) => p,
        Err(e) => return runtime_err(e),
    };
    match (args.qf_max, args.pf) {
        (Some(qf), Some(pf)) => {
            let req = match PerformanceRequirement::new(0.9, qf, pf) {
                Ok(r) => r,
                Err(e) => return config_err(e),
            };
            plan.set_required_size(sensing::cluster_size_eq4(&req));
        }
        (None, None) => {}
        _ => return config_err("--qf-max and --pf must be given together"),
    }
    if let Err(e) = fs::write(&args.out, plan.to_text()) {
        return runtime_err(format!("cannot write {}: {e}", args.out.display()));
    }
    println!(
        "wrote {} ({} assigned, {} unassigned)",
        args.out.display(),
        plan.assignments.len(),
        plan.unassigned.len()
    );
    ExitCode::SUCCESS
}
