//! CSV emission. Floats use fixed formats so reruns are byte-identical.

use std::fs;
use std::path::Path;

use mmnoma_core::agent::AgentState;
use mmnoma_core::engine::RunOutput;
use mmnoma_core::mac::PacketState;
use mmnoma_core::SimConfig;

use crate::aggregate::{convergence, group, point_stats, pooled_latency_eccdf};
use crate::config::ExperimentConfig;
use crate::error::{io_err, Result};
use crate::runner::{ExperimentResult, Sweep};
use crate::stats::Interval;

fn num(x: f64) -> String {
    format!("{x:.6}")
}

fn prob(x: f64) -> String {
    format!("{x:.9}")
}

fn sci(x: f64) -> String {
    format!("{x:.9e}")
}

fn half_width(i: &Interval) -> String {
    i.half_width.map_or_else(String::new, num)
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    Ok(csv::Writer::from_writer(file))
}

/// Writes every aggregate CSV plus per-run summaries and errors into `dir`.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, result: &ExperimentResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_run_summary(&dir.join("run_summary.csv"), result)?;
    write_run_errors(&dir.join("run_errors.csv"), result)?;
    let level = cfg.simulation.confidence_level;
    let stats = point_stats(&result.records, level);

    let mut w = writer(&dir.join("sumrate_vs_load.csv"))?;
    w.write_record(["load_mbps", "algorithm", "runs", "sum_rate_mbps", "ci_half_width_mbps"])?;
    for s in stats.iter().filter(|s| s.sweep == Sweep::Load) {
        let i = &s.sum_rate_mbps;
        w.write_record([num(s.load_mbps), s.algorithm.to_string(), i.runs.to_string(), num(i.mean), half_width(i)])?;
    }
    w.flush().map_err(io_err(dir))?;

    let mut w = writer(&dir.join("pdr_vs_load.csv"))?;
    w.write_record(["load_mbps", "algorithm", "runs", "pdr_pct", "ci_half_width_pct"])?;
    for s in stats.iter().filter(|s| s.sweep == Sweep::Load) {
        let i = &s.pdr_pct;
        w.write_record([num(s.load_mbps), s.algorithm.to_string(), i.runs.to_string(), num(i.mean), half_width(i)])?;
    }
    w.flush().map_err(io_err(dir))?;

    let mut w = writer(&dir.join("sumrate_vs_users.csv"))?;
    w.write_record(["users", "load_mbps", "algorithm", "runs", "sum_rate_mbps", "ci_half_width_mbps"])?;
    for s in stats.iter().filter(|s| s.sweep == Sweep::Users) {
        let i = &s.sum_rate_mbps;
        w.write_record([
            s.users.to_string(),
            num(s.load_mbps),
            s.algorithm.to_string(),
            i.runs.to_string(),
            num(i.mean),
            half_width(i),
        ])?;
    }
    w.flush().map_err(io_err(dir))?;

    let load_groups: Vec<_> = group(&result.records)
        .into_iter()
        .filter(|g| g[0].job.sweep == Sweep::Load)
        .collect();

    let mut w = writer(&dir.join("eccdf_latency.csv"))?;
    w.write_record(["load_mbps", "algorithm", "latency_ms", "ccdf"])?;
    for g in &load_groups {
        for (x, p) in pooled_latency_eccdf(g, cfg.simulation.tti_duration_ms) {
            w.write_record([num(g[0].job.load_mbps), g[0].job.algorithm.to_string(), num(x), prob(p)])?;
        }
    }
    w.flush().map_err(io_err(dir))?;

    let mut w = writer(&dir.join("convergence.csv"))?;
    w.write_record(["load_mbps", "tti", "cumulative_avg_reward"])?;
    for g in &load_groups {
        for (t, c) in convergence(g).into_iter().enumerate() {
            w.write_record([num(g[0].job.load_mbps), (t + 1).to_string(), prob(c)])?;
        }
    }
    w.flush().map_err(io_err(dir))?;
    Ok(())
}

fn write_run_summary(path: &Path, result: &ExperimentResult) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "sweep",
        "seed",
        "load_mbps",
        "users",
        "algorithm",
        "sum_rate_mbps",
        "pdr_pct",
        "mean_latency_ms",
        "generated",
        "delivered",
        "dropped",
        "pending",
    ])?;
    for r in &result.records {
        w.write_record([
            r.job.sweep.as_str().to_string(),
            r.job.seed.to_string(),
            num(r.job.load_mbps),
            r.users.to_string(),
            r.job.algorithm.to_string(),
            num(r.sum_rate_bps * 1e-6),
            num(r.pdr * 100.0),
            num(r.mean_latency_ms),
            r.generated.to_string(),
            r.delivered.to_string(),
            r.dropped.to_string(),
            r.pending.to_string(),
        ])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

fn write_run_errors(path: &Path, result: &ExperimentResult) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["sweep", "seed", "load_mbps", "users", "algorithm", "error"])?;
    for f in &result.failures {
        w.write_record([
            f.job.sweep.as_str().to_string(),
            f.job.seed.to_string(),
            num(f.job.load_mbps),
            f.job.num_users.map_or_else(String::new, |u| u.to_string()),
            f.job.algorithm.to_string(),
            f.message.clone(),
        ])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

fn state_name(s: AgentState) -> &'static str {
    match s {
        AgentState::S0 => "S0",
        AgentState::S1 => "S1",
    }
}

fn packet_state(s: PacketState) -> &'static str {
    match s {
        PacketState::Queued => "queued",
        PacketState::InFlight => "in_flight",
        PacketState::Delivered => "delivered",
        PacketState::Dropped => "dropped",
    }
}

fn opt_u32(x: Option<u32>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// Per-run detail: packets, agent trace, per-link SINR and topology.
pub fn write_run_traces(dir: &Path, out: &RunOutput, cfg: &SimConfig) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let tti_ms = cfg.simulation.tti_duration_ms;

    let mut w = writer(&dir.join("packets.csv"))?;
    w.write_record(["id", "user", "created_tti", "delivered_tti", "dropped_tti", "state", "retx", "latency_ms"])?;
    for p in &out.packets {
        w.write_record([
            p.id.to_string(),
            p.user.to_string(),
            p.created_tti.to_string(),
            opt_u32(p.delivered_tti),
            opt_u32(p.dropped_tti),
            packet_state(p.state).to_string(),
            p.retx_count.to_string(),
            p.latency_ttis().map_or_else(String::new, |l| num(l as f64 * tti_ms)),
        ])?;
    }
    w.flush().map_err(io_err(dir))?;

    let mut w = writer(&dir.join("agent_trace.csv"))?;
    w.write_record(["tti", "gnb", "state", "action", "reward", "avg_sinr_db", "cumulative_avg_reward"])?;
    for r in &out.agent_trace {
        w.write_record([
            r.tti.to_string(),
            r.gnb.to_string(),
            state_name(r.state).to_string(),
            r.action.to_string(),
            num(r.reward),
            num(r.avg_sinr_db),
            prob(r.cumulative_avg_reward),
        ])?;
    }
    w.flush().map_err(io_err(dir))?;

    let mut w = writer(&dir.join("links.csv"))?;
    w.write_record(["tti", "gnb", "beam", "user", "signal_w", "intra_w", "inter_w", "sinr_db", "rate_bps"])?;
    for l in &out.links {
        w.write_record([
            l.tti.to_string(),
            l.gnb.to_string(),
            l.beam.to_string(),
            l.user.to_string(),
            sci(l.signal_w),
            sci(l.intra_w),
            sci(l.inter_w),
            num(l.sinr_db),
            num(l.rate_bps),
        ])?;
    }
    w.flush().map_err(io_err(dir))?;

    let mut w = writer(&dir.join("topology.csv"))?;
    w.write_record(["kind", "id", "x_m", "y_m", "home_gnb", "intersection"])?;
    for (j, p) in out.topology.gnb_positions.iter().enumerate() {
        w.write_record(["gnb".to_string(), j.to_string(), num(p.x), num(p.y), String::new(), String::new()])?;
    }
    for (u, p) in out.topology.user_positions.iter().enumerate() {
        let home = out.intersection.home.get(u).map_or_else(String::new, |h| h.to_string());
        let isect = out.intersection.users.contains(&u);
        w.write_record(["user".to_string(), u.to_string(), num(p.x), num(p.y), home, isect.to_string()])?;
    }
    w.flush().map_err(io_err(dir))?;
    Ok(())
}
