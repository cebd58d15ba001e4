//! Reductions over run records: per-point intervals, pooled latency eCCDF
//! and the across-run convergence series.

use mmnoma_core::engine::Algorithm;
use mmnoma_core::metrics::{eccdf, mean_series};

use crate::runner::{RunRecord, Sweep};
use crate::stats::{confidence_interval, Interval};

#[derive(Debug, Clone, PartialEq)]
pub struct PointStats {
    pub sweep: Sweep,
    pub load_mbps: f64,
    /// Configured user count of the point (0 when drawn by the PCP).
    pub users: usize,
    pub algorithm: Algorithm,
    pub sum_rate_mbps: Interval,
    pub pdr_pct: Interval,
    pub mean_latency_ms: Interval,
}

fn same_point(a: &RunRecord, b: &RunRecord) -> bool {
    a.job.sweep == b.job.sweep
        && a.job.load_mbps == b.job.load_mbps
        && a.job.num_users == b.job.num_users
        && a.job.algorithm == b.job.algorithm
}

/// Groups records by sweep point and algorithm, in first-seen order.
pub fn group(records: &[RunRecord]) -> Vec<Vec<&RunRecord>> {
    let mut groups: Vec<Vec<&RunRecord>> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|g| same_point(g[0], r)) {
            Some(g) => g.push(r),
            None => groups.push(vec![r]),
        }
    }
    groups
}

pub fn point_stats(records: &[RunRecord], level: f64) -> Vec<PointStats> {
    group(records)
        .into_iter()
        .map(|g| {
            let job = g[0].job;
            let col = |f: fn(&RunRecord) -> f64| -> Vec<f64> { g.iter().map(|r| f(r)).collect() };
            let latencies: Vec<f64> = g.iter().map(|r| r.mean_latency_ms).filter(|l| l.is_finite()).collect();
            PointStats {
                sweep: job.sweep,
                load_mbps: job.load_mbps,
                users: job.num_users.unwrap_or(0),
                algorithm: job.algorithm,
                sum_rate_mbps: confidence_interval(&col(|r| r.sum_rate_bps * 1e-6), level),
                pdr_pct: confidence_interval(&col(|r| r.pdr * 100.0), level),
                mean_latency_ms: confidence_interval(&latencies, level),
            }
        })
        .collect()
}

/// eCCDF of delivered-packet latency pooled over the given runs, in ms.
pub fn pooled_latency_eccdf(records: &[&RunRecord], tti_ms: f64) -> Vec<(f64, f64)> {
    let samples: Vec<f64> = records
        .iter()
        .flat_map(|r| r.latency_hist.iter())
        .flat_map(|(&ttis, &count)| std::iter::repeat_n(ttis as f64, count as usize))
        .collect();
    match eccdf(&samples) {
        Ok(points) => points.into_iter().map(|(t, p)| (t * tti_ms, p)).collect(),
        Err(_) => Vec::new(),
    }
}

/// Cumulative average reward averaged over agents and runs.
pub fn convergence(records: &[&RunRecord]) -> Vec<f64> {
    let series: Vec<Vec<f64>> = records
        .iter()
        .filter(|r| !r.cumulative_reward.is_empty())
        .map(|r| r.cumulative_reward.clone())
        .collect();
    mean_series(&series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::Job;
    use std::collections::BTreeMap;

    fn rec(seed: u64, algorithm: Algorithm, load: f64, rate: f64, hist: &[(u32, u64)]) -> RunRecord {
        RunRecord {
            job: Job {
                sweep: Sweep::Load,
                seed,
                algorithm,
                load_mbps: load,
                num_users: Some(9),
            },
            users: 9,
            generated: 10,
            delivered: 10,
            dropped: 0,
            pending: 0,
            pdr: 0.0,
            sum_rate_bps: rate,
            mean_latency_ms: 0.1429,
            latency_hist: hist.iter().copied().collect::<BTreeMap<_, _>>(),
            cumulative_reward: vec![1.0, 0.0],
            max_abs_q: 0.0,
        }
    }

    #[test]
    fn groups_follow_first_appearance() {
        let r = vec![
            rec(1, Algorithm::QLearning, 1.0, 2e6, &[]),
            rec(1, Algorithm::Upa, 1.0, 1e6, &[]),
            rec(2, Algorithm::QLearning, 1.0, 4e6, &[]),
        ];
        let s = point_stats(&r, 0.95);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].algorithm, Algorithm::QLearning);
        assert_eq!(s[0].sum_rate_mbps.mean, 3.0);
        assert_eq!(s[0].sum_rate_mbps.runs, 2);
        assert_eq!(s[1].sum_rate_mbps.half_width, None);
    }

    #[test]
    fn pooled_eccdf_counts_every_packet() {
        let a = rec(1, Algorithm::Upa, 1.0, 0.0, &[(1, 2)]);
        let b = rec(2, Algorithm::Upa, 1.0, 0.0, &[(2, 1)]);
        let c = pooled_latency_eccdf(&[&a, &b], 0.1429);
        assert_eq!(c.len(), 2);
        assert!((c[0].0 - 0.1429).abs() < 1e-15);
        assert!((c[0].1 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(c[1].1, 0.0);
    }

    #[test]
    fn convergence_averages_runs() {
        let a = rec(1, Algorithm::QLearning, 1.0, 0.0, &[]);
        let mut b = a.clone();
        b.cumulative_reward = vec![-1.0, 0.0];
        assert_eq!(convergence(&[&a, &b]), vec![0.0, 0.0]);
    }
}
