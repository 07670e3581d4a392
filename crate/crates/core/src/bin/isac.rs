use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use isac_core::config::FileConfig;
use isac_core::optimizer::SlotStatus;
use isac_core::runner::{
    emit_episode_csv, emit_table_csv, emit_trace_csv, has_internal_error, run_episode, run_experiment, Mode,
};
use isac_core::scenario::build_scenario;
use isac_core::Result;

/// Gesture-aware THz ISAC simulator.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write one CSV row per slot and user.
    Run(RunArgs),
    /// Run the experiment section of the config and write a summary table.
    Sweep(SweepArgs),
    /// Print a configuration file with every default filled in.
    Defaults {
        /// Write to this file instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults are used when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Power budget in dBm, overriding the config.
    #[arg(long)]
    p_max_dbm: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Output CSV path.
    #[arg(short, long)]
    output: PathBuf,
    /// Measurement noise seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "joint")]
    mode: Mode,
    /// Append the optimizer wall time per slot.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Output CSV path of the summary table.
    #[arg(short, long)]
    output: PathBuf,
    /// Per-slot traces of dynamic experiments.
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Comma-separated modes, overriding the config.
    #[arg(long, value_delimiter = ',')]
    modes: Vec<Mode>,
    /// Comma-separated seeds, overriding the config.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
}

fn load(common: &Common) -> Result<FileConfig> {
    let mut config = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(p) = common.p_max_dbm {
        config.run.p_max_dbm = p;
    }
    Ok(config)
}

fn write_or_print(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => {
            std::fs::write(path, text).map_err(|source| isac_core::IsacError::Io { path: path.to_path_buf(), source })
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(args: RunArgs) -> Result<bool> {
    let config = load(&args.common)?;
    let seed = args.seed.unwrap_or(config.scenario.seed);
    let scenario = build_scenario(config.scenario.clone())?;
    let records = run_episode(&scenario, args.mode, &config.runner(), seed)?;
    emit_episode_csv(&records, &args.output, args.timing)?;
    let infeasible = records.iter().filter(|r| r.status == SlotStatus::Infeasible).count();
    log::info!("{} slots written to {}, {infeasible} infeasible", records.len(), args.output.display());
    Ok(!has_internal_error(&records))
}

fn sweep(args: SweepArgs) -> Result<bool> {
    let config = load(&args.common)?;
    let mut spec = config
        .experiment
        .clone()
        .ok_or_else(|| isac_core::IsacError::InvalidConfig("the config has no [experiment] section".into()))?;
    if !args.modes.is_empty() {
        spec.modes = args.modes;
    }
    if !args.seeds.is_empty() {
        spec.seeds = args.seeds;
    }
    let table = run_experiment(&spec, &config.scenario, &config.runner())?;
    emit_table_csv(&table.rows, &args.output)?;
    if let Some(path) = &args.traces {
        emit_trace_csv(&table.traces, path)?;
    }
    let clean = table.rows.iter().all(|r| r.status != SlotStatus::InternalError)
        && table.traces.iter().all(|r| r.status != SlotStatus::InternalError);
    Ok(clean)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Defaults { output } => {
            FileConfig::example().to_toml().and_then(|t| write_or_print(&t, output.as_deref())).map(|_| true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: at least one slot reported an internal error");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
