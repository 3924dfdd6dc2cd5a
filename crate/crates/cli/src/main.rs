//! Command line front end: run scenarios, sweep parameter axes, and export
//! built-in scenario files.
//!
//! Exit codes: 0 success, 2 configuration problem, 3 I/O problem,
//! 4 internal error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lora_tow_sim::bandit::Policy;
use lora_tow_sim::report::{
    build_report, frames_to_jsonl, rows_from_runs, rows_to_csv, run_sweep, run_trials, sort_rows,
    sweep_report, SweepPoint,
};
use lora_tow_sim::scenario::{builtin, load_config, ScenarioConfig, BUILTIN_NAMES};

// ---------------------------------------------------------------------------
// Argument shapes
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "lora-tow-sim",
    version,
    about = "Deterministic simulator for learning-driven LoRa channel/SF selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and emit a full report.
    Run(RunArgs),
    /// Run a family of scenarios across an axis and emit one row per trial.
    Sweep(SweepArgs),
    /// List built-in scenarios or export one as TOML.
    Preset(PresetArgs),
}

#[derive(Args)]
struct Source {
    /// Built-in scenario name (see `preset --list`).
    #[arg(long, conflicts_with = "config")]
    builtin: Option<String>,

    /// Scenario TOML file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,

    /// Override the scenario's policy (tow, ucb1tuned, egreedy, random).
    #[arg(long)]
    policy: Option<Policy>,

    /// Override the device count (single-group scenarios only).
    #[arg(long)]
    devices: Option<u32>,

    /// Override the number of trials.
    #[arg(long)]
    seeds: Option<u32>,

    /// Master seed; every per-trial stream derives from it.
    #[arg(long, default_value_t = 42)]
    master_seed: u64,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Append every frame of every trial to this file as JSON Lines.
    #[arg(long)]
    event_log: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: Source,

    /// Comma-separated device counts forming the sweep axis.
    #[arg(long, value_delimiter = ',')]
    devices: Vec<u32>,

    /// Comma-separated built-in scenario names forming the sweep axis.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["devices", "builtin", "config"])]
    presets: Vec<String>,

    /// Comma-separated policies to compare (default: all four).
    #[arg(long, value_delimiter = ',')]
    policies: Vec<Policy>,

    /// Override the number of trials per cell.
    #[arg(long)]
    seeds: Option<u32>,

    /// Master seed; every per-trial stream derives from it.
    #[arg(long, default_value_t = 42)]
    master_seed: u64,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write rows here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PresetArgs {
    /// List every built-in scenario name.
    #[arg(long, conflicts_with = "name")]
    list: bool,

    /// Name of the built-in scenario to export as TOML.
    name: Option<String>,
}

// ---------------------------------------------------------------------------
// Error-to-exit-code plumbing
// ---------------------------------------------------------------------------

enum AppError {
    Config(String),
    Io(String),
    Internal(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Io(_) => 3,
            AppError::Internal(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Config(m) | AppError::Io(m) | AppError::Internal(m) => m,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> AppError {
    AppError::Config(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = setup_threads() {
        eprintln!("error: {}", e.message());
        return ExitCode::from(e.exit_code());
    }
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Preset(args) => cmd_preset(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

/// Honor `LORA_TOW_SIM_THREADS` for the trial worker pool. Results never
/// depend on the pool size; this only controls CPU usage.
fn setup_threads() -> Result<(), AppError> {
    if let Ok(v) = std::env::var("LORA_TOW_SIM_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| AppError::Config(format!("LORA_TOW_SIM_THREADS: not a thread count: {v:?}")))?;
        if n == 0 {
            return Err(AppError::Config("LORA_TOW_SIM_THREADS: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| AppError::Internal(format!("thread pool: {e}")))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn load_source(source: &Source) -> Result<ScenarioConfig, AppError> {
    match (&source.builtin, &source.config) {
        (Some(name), None) => builtin(name).map_err(config_err),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
            load_config(&text).map_err(config_err)
        }
        (None, None) => Err(AppError::Config("one of --builtin or --config is required".into())),
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    }
}

fn write_output(out: Option<&Path>, body: &str) -> Result<(), AppError> {
    match out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| AppError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<(), AppError> {
    let mut cfg = load_source(&args.source)?;
    if let Some(policy) = args.policy {
        cfg.policy.kind = policy;
    }
    if let Some(devices) = args.devices {
        cfg.set_device_count(devices).map_err(config_err)?;
    }
    if let Some(seeds) = args.seeds {
        cfg.trials = seeds;
    }
    cfg.validate().map_err(config_err)?;

    let runs = run_trials(&cfg, args.master_seed).map_err(config_err)?;

    if let Some(path) = &args.event_log {
        let mut body = String::new();
        for run in &runs {
            body.push_str(&frames_to_jsonl(run.trial, &run.output.frames));
        }
        std::fs::write(path, body).map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
    }

    let report = build_report(&cfg, args.master_seed, &runs);
    match report.aggregate.fsr {
        Some(a) => eprintln!(
            "{}/{}: fsr mean={:.6} std={:.6} ci95={:.6} over {} trial(s)",
            report.scenario, report.policy, a.mean, a.std_dev, a.ci95, a.n
        ),
        None => eprintln!("{}/{}: no attempts recorded", report.scenario, report.policy),
    }

    let body = match args.format {
        Format::Json => report.to_json(),
        Format::Csv => {
            let mut rows = rows_from_runs(&cfg.name.clone(), &cfg, &runs);
            sort_rows(&mut rows);
            rows_to_csv(&rows)
        }
    };
    write_output(args.out.as_deref(), &body)
}

fn cmd_sweep(args: SweepArgs) -> Result<(), AppError> {
    let policies: Vec<Policy> =
        if args.policies.is_empty() { Policy::ALL.to_vec() } else { args.policies.clone() };

    let mut points: Vec<SweepPoint> = Vec::new();
    if !args.presets.is_empty() {
        for name in &args.presets {
            let mut cfg = builtin(name).map_err(config_err)?;
            if let Some(seeds) = args.seeds {
                cfg.trials = seeds;
            }
            points.push(SweepPoint { axis_value: name.clone(), cfg });
        }
    } else if !args.devices.is_empty() {
        let base = load_source(&args.source)?;
        for &m in &args.devices {
            let mut cfg = base.clone();
            cfg.set_device_count(m).map_err(config_err)?;
            if let Some(seeds) = args.seeds {
                cfg.trials = seeds;
            }
            points.push(SweepPoint { axis_value: m.to_string(), cfg });
        }
    } else {
        return Err(AppError::Config(
            "sweep needs an axis: --devices <counts> with a base scenario, or --presets <names>"
                .into(),
        ));
    }

    let rows = run_sweep(&points, &policies, args.master_seed).map_err(config_err)?;
    eprintln!(
        "{} rows ({} axis points x {} policies, {} trial(s) each)",
        rows.len(),
        points.len(),
        policies.len(),
        rows.len() / (points.len() * policies.len()).max(1)
    );
    let body = match args.format {
        Format::Csv => rows_to_csv(&rows),
        Format::Json => sweep_report(args.master_seed, rows).to_json(),
    };
    write_output(args.out.as_deref(), &body)
}

fn cmd_preset(args: PresetArgs) -> Result<(), AppError> {
    if args.list {
        let mut body = String::new();
        for name in BUILTIN_NAMES {
            body.push_str(name);
            body.push('\n');
        }
        print!("{body}");
        return Ok(());
    }
    match args.name {
        Some(name) => {
            let cfg = builtin(&name).map_err(config_err)?;
            print!("{}", cfg.to_toml());
            Ok(())
        }
        None => Err(AppError::Config("preset needs a name or --list".into())),
    }
}
