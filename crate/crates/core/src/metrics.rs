//! Per-run accounting and simple statistics over packet and reward traces.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mac::{Packet, PacketState};

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub generated: usize,
    pub delivered: usize,
    pub dropped: usize,
    /// Still queued or in flight when the run ended.
    pub pending: usize,
    /// `dropped / (dropped + delivered)`.
    pub pdr: f64,
    pub sum_rate_bps: f64,
    pub mean_latency_ms: f64,
    /// Delivered-packet latencies in whole TTIs.
    pub latency_ttis: Vec<u32>,
}

/// Summarizes a finished run of `ttis` intervals of `tti_s` seconds each.
pub fn account_metrics(packets: &[Packet], packet_bits: u32, ttis: u32, tti_s: f64) -> Result<MetricsRecord> {
    let mut delivered = 0;
    let mut dropped = 0;
    let mut latency_ttis = Vec::new();
    for p in packets {
        match p.state {
            PacketState::Delivered => {
                delivered += 1;
                latency_ttis.push(p.latency_ttis().expect("delivered packet has a delivery TTI"));
            }
            PacketState::Dropped => dropped += 1,
            _ => {}
        }
    }
    if delivered + dropped == 0 {
        return Err(Error::NoPackets);
    }
    let mean_ttis = if latency_ttis.is_empty() {
        f64::NAN
    } else {
        latency_ttis.iter().map(|&l| l as f64).sum::<f64>() / latency_ttis.len() as f64
    };
    Ok(MetricsRecord {
        generated: packets.len(),
        delivered,
        dropped,
        pending: packets.len() - delivered - dropped,
        pdr: dropped as f64 / (dropped + delivered) as f64,
        sum_rate_bps: delivered as f64 * packet_bits as f64 / (ttis as f64 * tti_s),
        mean_latency_ms: mean_ttis * tti_s * 1e3,
        latency_ttis,
    })
}

/// Empirical complementary CDF: one `(x, P(X > x))` point per distinct
/// sample value, ascending in `x`.
pub fn eccdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        let tail = (sorted.len() - i - 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = tail,
            _ => out.push((x, tail)),
        }
    }
    Ok(out)
}

/// `c_t = (1/t) Σ_{τ≤t} r_τ`.
pub fn cumulative_average(rewards: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    rewards
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            sum += r;
            sum / (i + 1) as f64
        })
        .collect()
}

/// Pointwise mean over equally long series.
pub fn mean_series(series: &[Vec<f64>]) -> Vec<f64> {
    let Some(len) = series.iter().map(Vec::len).min() else {
        return Vec::new();
    };
    (0..len)
        .map(|t| series.iter().map(|s| s[t]).sum::<f64>() / series.len() as f64)
        .collect()
}
