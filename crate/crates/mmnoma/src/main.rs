use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mmnoma::manifest::Manifest;
use mmnoma::{load_config, simulate, CliError, ExperimentConfig};
use mmnoma_core::engine::Algorithm;

#[derive(Parser, Debug)]
#[command(version, about = "Two-cell mmWave-NOMA simulator with Q-learning power control", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment sweep and write CSV results.
    Simulate(SimulateArgs),
}

#[derive(Parser, Debug)]
struct SimulateArgs {
    /// TOML experiment file; omitted keys take their defaults.
    #[arg(long, required_unless_present = "manifest")]
    config: Option<PathBuf>,

    /// Reproduce the configuration recorded in a manifest.json.
    #[arg(long, conflicts_with = "config")]
    manifest: Option<PathBuf>,

    /// Restrict to one algorithm.
    #[arg(long)]
    algo: Option<Algorithm>,

    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,

    /// Keep only the first N seeds.
    #[arg(long)]
    runs: Option<usize>,

    /// Output directory [default: $MMNOMA_OUT or ./results].
    #[arg(long, env = "MMNOMA_OUT", default_value = "results")]
    out: PathBuf,

    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 1)]
    parallel: usize,

    /// Write per-run packet, agent, link and topology traces.
    #[arg(long, default_value_t = false)]
    traces: bool,
}

fn effective_config(args: &SimulateArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&args.manifest, &args.config) {
        (Some(m), _) => Manifest::read(m)?.config,
        (None, Some(c)) => load_config(c)?,
        (None, None) => unreachable!("clap requires --config or --manifest"),
    };
    if let Some(a) = args.algo {
        cfg.experiment.algorithms = vec![a];
    }
    let mut seeds = args.seeds.clone().unwrap_or_else(|| cfg.seeds());
    if let Some(n) = args.runs {
        seeds.truncate(n);
    }
    cfg.simulation.runs = seeds.len().max(1);
    cfg.experiment.seeds = Some(seeds);
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: SimulateArgs) -> Result<(), CliError> {
    let cfg = effective_config(&args)?;
    let result = simulate(&cfg, &args.out, args.parallel, args.traces)?;
    let total = result.records.len() + result.failures.len();
    eprintln!("{} runs written to {}", result.records.len(), args.out.display());
    if !result.failures.is_empty() {
        return Err(CliError::Runs {
            failed: result.failures.len(),
            total,
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Simulate(args) => run(args),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
