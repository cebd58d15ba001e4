//! Downlink SINR with residual intra-beam NOMA interference and inter-beam
//! inter-cell interference, plus the aggregate rate and per-cell average SINR.
//!
//! For user `u` on beam `k` of gNB `j`:
//!
//! ```text
//! Γ  = P_kj β_u g_u / (I1 + I2 + σ²),    g_u = |h_{u,j}^H w_kj|²
//! I1 = P_kj g_u Σ_{i≠u, O(i)>O(u)} β_i
//! I2 = Σ_{l ∈ beams of other gNBs} P_l |h_{u,j(l)}^H w_l|²
//! ```
//!
//! With `subband_matched` set, `I2` only counts foreign beams sharing the
//! victim beam's index (beams of one gNB occupy distinct subbands).

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::phy::{self, BeamformingWeight, ChannelTable};

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct InterferenceConfig {
    pub subband_matched: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamState {
    pub gnb: usize,
    /// Beam index within its gNB; doubles as the subband index.
    pub index: usize,
    pub power_w: f64,
    pub weight: BeamformingWeight,
    pub members: Vec<usize>,
    /// NOMA power factor per member.
    pub beta: Vec<f64>,
    /// SIC decoding rank per member.
    pub ranks: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct NetworkState<'a> {
    pub channels: &'a ChannelTable,
    pub beams: Vec<BeamState>,
    pub noise_w: f64,
    pub subband_matched: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkRef {
    pub beam: usize,
    pub slot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSinr {
    pub gamma: f64,
    pub signal: f64,
    pub intra: f64,
    pub inter: f64,
    pub noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkEval {
    pub link: LinkRef,
    pub user: usize,
    pub gnb: usize,
    pub beam_index: usize,
    pub sinr: LinkSinr,
}

impl<'a> NetworkState<'a> {
    pub fn links(&self) -> impl Iterator<Item = LinkRef> + '_ {
        self.beams
            .iter()
            .enumerate()
            .flat_map(|(b, beam)| (0..beam.members.len()).map(move |slot| LinkRef { beam: b, slot }))
    }

    pub fn user_of(&self, link: LinkRef) -> usize {
        self.beams[link.beam].members[link.slot]
    }

    /// `|h^H w|²` of beam `beam` toward `user` (channel from the beam's gNB).
    pub fn gain(&self, user: usize, beam: usize) -> f64 {
        let b = &self.beams[beam];
        let h = self.channels.channel(user, b.gnb);
        phy::inner(&h.coeffs, b.weight.coeffs()).norm_sqr()
    }

    fn interferes(&self, victim_beam: usize, other: usize) -> bool {
        let v = &self.beams[victim_beam];
        let o = &self.beams[other];
        o.gnb != v.gnb && (!self.subband_matched || o.index == v.index)
    }
}

pub fn intra_beam_interference(state: &NetworkState<'_>, link: LinkRef) -> f64 {
    let beam = &state.beams[link.beam];
    let own_rank = beam.ranks[link.slot];
    let residual: f64 = beam
        .ranks
        .iter()
        .zip(&beam.beta)
        .enumerate()
        .filter(|&(i, (&r, _))| i != link.slot && r > own_rank)
        .map(|(_, (_, &b))| b)
        .sum();
    if residual == 0.0 {
        return 0.0;
    }
    beam.power_w * state.gain(state.user_of(link), link.beam) * residual
}

pub fn inter_cell_interference(state: &NetworkState<'_>, link: LinkRef) -> f64 {
    let user = state.user_of(link);
    (0..state.beams.len())
        .filter(|&l| state.interferes(link.beam, l))
        .map(|l| state.beams[l].power_w * state.gain(user, l))
        .sum()
}

pub fn link_sinr(state: &NetworkState<'_>, link: LinkRef) -> LinkSinr {
    let beam = &state.beams[link.beam];
    let signal = beam.power_w * beam.beta[link.slot] * state.gain(state.user_of(link), link.beam);
    let intra = intra_beam_interference(state, link);
    let inter = inter_cell_interference(state, link);
    LinkSinr {
        gamma: signal / (intra + inter + state.noise_w),
        signal,
        intra,
        inter,
        noise: state.noise_w,
    }
}

/// Evaluates every active link.
pub fn evaluate(state: &NetworkState<'_>) -> Vec<LinkEval> {
    state
        .links()
        .map(|link| {
            let beam = &state.beams[link.beam];
            LinkEval {
                link,
                user: beam.members[link.slot],
                gnb: beam.gnb,
                beam_index: beam.index,
                sinr: link_sinr(state, link),
            }
        })
        .collect()
}

/// Bandwidth each link's rate is computed over.
pub fn link_bandwidth(total_hz: f64, beams_per_gnb: usize, subband_matched: bool) -> f64 {
    if subband_matched {
        total_hz / beams_per_gnb as f64
    } else {
        total_hz
    }
}

/// `ω Σ log₂(1 + Γ)` over all links, in bit/s.
pub fn sum_rate(state: &NetworkState<'_>, link_bandwidth_hz: f64) -> f64 {
    link_bandwidth_hz
        * state
            .links()
            .map(|l| (1.0 + link_sinr(state, l).gamma).log2())
            .sum::<f64>()
}

/// Mean linear SINR over the links served by `gnb`; 0 when it serves nobody.
pub fn avg_sinr_gnb(state: &NetworkState<'_>, gnb: usize) -> f64 {
    let (sum, count) = state
        .links()
        .filter(|l| state.beams[l.beam].gnb == gnb)
        .fold((0.0, 0usize), |(s, c), l| (s + link_sinr(state, l).gamma, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Pilot SINR a user would report for `gnb`: the best of that gNB's beams at
/// full beam power, against every interfering foreign beam. Used to rank
/// gNBs in the UE priority list.
pub fn reference_sinr(state: &NetworkState<'_>, user: usize, gnb: usize) -> f64 {
    let mut best = 0.0;
    for (b, beam) in state.beams.iter().enumerate() {
        if beam.gnb != gnb {
            continue;
        }
        let signal = beam.power_w * state.gain(user, b);
        let inter: f64 = (0..state.beams.len())
            .filter(|&l| state.interferes(b, l))
            .map(|l| state.beams[l].power_w * state.gain(user, l))
            .sum();
        let s = signal / (inter + state.noise_w);
        if s > best {
            best = s;
        }
    }
    best
}
