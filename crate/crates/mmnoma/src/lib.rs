//! Experiment orchestration for the `mmnoma-core` simulator: TOML
//! configuration, sweep scheduling, confidence intervals and CSV output.

pub mod aggregate;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod runner;
pub mod stats;

use std::path::Path;

pub use config::{load_config, parse_config, ExperimentConfig};
pub use error::{CliError, Result};
pub use runner::{run_experiment, ExperimentResult, RunRecord, RunnerOptions};

/// Runs `cfg` and writes CSVs and `manifest.json` into `out`. Returns the
/// result even when some runs failed; callers decide the exit status.
pub fn simulate(cfg: &ExperimentConfig, out: &Path, parallel: usize, traces: bool) -> Result<ExperimentResult> {
    let opts = RunnerOptions {
        parallel,
        traces: traces.then(|| out.join("traces")),
    };
    let result = run_experiment(cfg, &opts)?;
    output::write_outputs(out, cfg, &result)?;
    let jobs = result.records.len() + result.failures.len();
    manifest::Manifest::new(cfg, jobs, result.failures.len()).write(&out.join("manifest.json"))?;
    Ok(result)
}
