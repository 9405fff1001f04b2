//! Command-line front end: load a scenario configuration, run a single
//! point or the full experiment grid, and write result files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wbbn_sim::scenario::{self, ScenarioConfig, ScenarioError};

#[derive(Parser)]
#[command(
    name = "wbbn",
    about = "Packet-level simulator for body-to-body network dissemination strategies",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario configuration (JSON). Omitted keys take their defaults.
    config: PathBuf,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the iteration count.
    #[arg(long)]
    iterations: Option<u32>,
    /// Output directory (default "out", or $WBBN_OUT_DIR).
    #[arg(long, short)]
    out_dir: Option<PathBuf>,
    /// Write a per-iteration event trace (time, seq, target, kind).
    #[arg(long)]
    trace_events: bool,
    /// Write per-iteration node trajectories.
    #[arg(long)]
    trace_trajectory: bool,
    /// Write per-iteration delivered-traffic DOT graphs.
    #[arg(long)]
    dot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scenario point for all iterations.
    Run(RunArgs),
    /// Run the Cartesian sweep over the configured axes.
    Sweep(RunArgs),
}

fn effective_out_dir(arg: Option<PathBuf>) -> PathBuf {
    arg.or_else(|| std::env::var_os("WBBN_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn prepare(args: &RunArgs) -> Result<(ScenarioConfig, PathBuf), ScenarioError> {
    let mut cfg = scenario::load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(iterations) = args.iterations {
        cfg.iterations = iterations;
    }
    cfg.output.event_trace |= args.trace_events;
    cfg.output.trajectory |= args.trace_trajectory;
    cfg.output.dot |= args.dot;
    cfg.validate()?;
    Ok((cfg, effective_out_dir(args.out_dir.clone())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, is_sweep) = match &cli.command {
        Command::Run(a) => (a, false),
        Command::Sweep(a) => (a, true),
    };
    let (cfg, out_dir) = match prepare(args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("wbbn: {e}");
            return ExitCode::from(1);
        }
    };
    let result = if is_sweep {
        scenario::sweep(&cfg, &out_dir)
    } else {
        scenario::run_scenario(&cfg, &out_dir)
    };
    match result {
        Ok(outputs) => {
            let runs: usize = outputs.results.iter().map(|p| p.runs.len()).sum();
            println!(
                "wbbn: {} point(s), {} run(s); results in {}",
                outputs.results.len(),
                runs,
                outputs.out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e @ ScenarioError::Config(_)) => {
            eprintln!("wbbn: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("wbbn: {e}");
            ExitCode::from(2)
        }
    }
}
