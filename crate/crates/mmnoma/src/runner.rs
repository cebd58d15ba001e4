//! Sweep expansion and run scheduling. Each run is reduced to a small
//! [`RunRecord`] as soon as it finishes, so large sweeps stay cheap in memory.

use std::collections::BTreeMap;
use std::path::PathBuf;

use mmnoma_core::engine::{Algorithm, RunOptions, RunOutput, RunSpec, Simulation};
use mmnoma_core::metrics::{cumulative_average, mean_series};
use mmnoma_core::SimConfig;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sweep {
    Load,
    Users,
}

impl Sweep {
    pub fn as_str(self) -> &'static str {
        match self {
            Sweep::Load => "load",
            Sweep::Users => "users",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub sweep: Sweep,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub load_mbps: f64,
    pub num_users: Option<usize>,
}

impl Job {
    pub fn spec(&self) -> RunSpec {
        RunSpec {
            seed: self.seed,
            algorithm: self.algorithm,
            offered_load_mbps: self.load_mbps,
            num_users: self.num_users,
        }
    }

    /// Directory name for this run's trace files.
    pub fn label(&self) -> String {
        let users = self.num_users.map_or_else(|| "pcp".to_string(), |u| u.to_string());
        format!(
            "{}_load{}_users{}_{}_seed{}",
            self.sweep.as_str(),
            self.load_mbps,
            users,
            self.algorithm,
            self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub job: Job,
    /// Users actually deployed.
    pub users: usize,
    pub generated: usize,
    pub delivered: usize,
    pub dropped: usize,
    pub pending: usize,
    pub pdr: f64,
    pub sum_rate_bps: f64,
    pub mean_latency_ms: f64,
    /// Delivered packets per latency in TTIs.
    pub latency_hist: BTreeMap<u32, u64>,
    /// Per-TTI cumulative average reward, averaged over agents. Empty for UPA.
    pub cumulative_reward: Vec<f64>,
    pub max_abs_q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub job: Job,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct RunnerOptions {
    /// Worker threads; 0 lets rayon decide.
    pub parallel: usize,
    /// Write per-run trace CSVs under this directory.
    pub traces: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

/// Load sweep at the configured user count, then the optional user sweep.
/// Order: sweep, point, algorithm, seed.
pub fn expand_jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let seeds = cfg.seeds();
    let e = &cfg.experiment;
    let mut jobs = Vec::new();
    for &load in &e.loads_mbps {
        for &algorithm in &e.algorithms {
            for &seed in &seeds {
                jobs.push(Job {
                    sweep: Sweep::Load,
                    seed,
                    algorithm,
                    load_mbps: load,
                    num_users: cfg.simulation.num_users,
                });
            }
        }
    }
    for &users in &e.users {
        for &algorithm in &e.algorithms {
            for &seed in &seeds {
                jobs.push(Job {
                    sweep: Sweep::Users,
                    seed,
                    algorithm,
                    load_mbps: e.users_sweep_load_mbps,
                    num_users: Some(users),
                });
            }
        }
    }
    jobs
}

pub fn summarize(job: Job, out: &RunOutput) -> RunRecord {
    let m = &out.metrics;
    let mut latency_hist = BTreeMap::new();
    for &l in &m.latency_ttis {
        *latency_hist.entry(l).or_insert(0) += 1;
    }
    let num_agents = out.agent_trace.iter().map(|r| r.gnb + 1).max().unwrap_or(0);
    let per_agent: Vec<Vec<f64>> = (0..num_agents).map(|j| cumulative_average(&out.rewards(j))).collect();
    RunRecord {
        job,
        users: out.topology.num_users(),
        generated: m.generated,
        delivered: m.delivered,
        dropped: m.dropped,
        pending: m.pending,
        pdr: m.pdr,
        sum_rate_bps: m.sum_rate_bps,
        mean_latency_ms: m.mean_latency_ms,
        latency_hist,
        cumulative_reward: mean_series(&per_agent),
        max_abs_q: out.max_abs_q,
    }
}

fn run_job(sim: &Simulation<'_>, job: Job, opts: &RunnerOptions, cfg: &SimConfig) -> Result<RunRecord> {
    let record_links = opts.traces.is_some();
    let out = sim.run(job.spec(), RunOptions { record_links })?;
    if let Some(dir) = &opts.traces {
        output::write_run_traces(&dir.join(job.label()), &out, cfg)?;
    }
    Ok(summarize(job, &out))
}

/// Runs every job. Failures are collected rather than aborting the sweep.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunnerOptions) -> Result<ExperimentResult> {
    cfg.validate()?;
    let sim_cfg = cfg.sim();
    let sim = Simulation::new(&sim_cfg)?;
    let jobs = expand_jobs(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallel)
        .build()
        .expect("thread pool");
    let results: Vec<(Job, Result<RunRecord>)> = pool.install(|| {
        jobs.par_iter()
            .map(|&job| (job, run_job(&sim, job, opts, &sim_cfg)))
            .collect()
    });
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (job, r) in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(RunFailure { job, message: e.to_string() }),
        }
    }
    Ok(ExperimentResult { records, failures })
}
