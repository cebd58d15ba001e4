//! TTI-level MAC: Poisson packet arrivals, per-user FIFO queues, Shannon-rate
//! transport blocks and asynchronous HARQ with a fixed feedback delay.
//!
//! A transport block is sized from the SINR estimate (the previous TTI's
//! SINR) and decodes iff the SINR actually seen is at least that estimate.
//! Successful blocks deliver their packets in the TTI they are sent; the
//! HARQ process stays busy until the ACK arrives. A NACK triggers one
//! retransmission in the feedback TTI, judged against the same requirement;
//! a block that fails all its attempts drops its packets when the last NACK
//! arrives.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct HarqConfig {
    pub processes: usize,
    pub round_trip_ttis: u32,
    pub max_retransmissions: u32,
    /// Chase combining: a retransmission decodes when the SINR summed over
    /// all attempts reaches the requirement. Otherwise each attempt stands
    /// alone.
    pub soft_combining: bool,
}

impl Default for HarqConfig {
    fn default() -> Self {
        Self {
            processes: 6,
            round_trip_ttis: 4,
            max_retransmissions: 1,
            soft_combining: true,
        }
    }
}

impl HarqConfig {
    pub fn validate(&self) -> Result<()> {
        if self.processes == 0 {
            return Err(Error::invalid("harq.processes", "must be at least 1"));
        }
        if self.round_trip_ttis == 0 {
            return Err(Error::invalid("harq.round_trip_ttis", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrafficConfig {
    pub packet_size_bytes: u32,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            packet_size_bytes: 32,
        }
    }
}

impl TrafficConfig {
    pub fn packet_bits(&self) -> u32 {
        self.packet_size_bytes * 8
    }

    pub fn validate(&self) -> Result<()> {
        if self.packet_size_bytes == 0 {
            return Err(Error::invalid("traffic.packet_size_bytes", "must be positive"));
        }
        Ok(())
    }
}

/// Mean arrivals per user per TTI.
pub fn arrival_mean(offered_load_bps: f64, num_users: usize, tti_s: f64, packet_bits: u32) -> f64 {
    if num_users == 0 {
        return 0.0;
    }
    offered_load_bps / num_users as f64 * tti_s / packet_bits as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketState {
    Queued,
    InFlight,
    Delivered,
    Dropped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub id: usize,
    pub user: usize,
    pub created_tti: u32,
    pub delivered_tti: Option<u32>,
    /// TTI at which the packet was declared lost.
    pub dropped_tti: Option<u32>,
    pub state: PacketState,
    pub retx_count: u32,
}

impl Packet {
    /// Whole TTIs from creation to delivery, counting both ends.
    pub fn latency_ttis(&self) -> Option<u32> {
        self.delivered_tti.map(|d| d - self.created_tti + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarqProcess {
    pub id: usize,
    pub packets: Vec<usize>,
    pub tx_tti: u32,
    pub retx_count: u32,
    pub required_sinr: f64,
    /// SINR summed over the attempts so far.
    pub accumulated_sinr: f64,
    pub decoded: bool,
    pub awaiting_feedback: bool,
}

impl HarqProcess {
    fn idle(id: usize) -> Self {
        Self {
            id,
            packets: Vec::new(),
            tx_tti: 0,
            retx_count: 0,
            required_sinr: 0.0,
            accumulated_sinr: 0.0,
            decoded: false,
            awaiting_feedback: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedbackEvent {
    pub user: usize,
    pub process: usize,
    pub tx_tti: u32,
    pub feedback_tti: u32,
    pub ack: bool,
}

/// Per-user radio conditions for one TTI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkInput {
    /// SINR experienced this TTI (linear).
    pub gamma: f64,
    /// SINR estimate used for rate selection (linear).
    pub gamma_est: f64,
    pub bandwidth_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TtiReport {
    pub new_blocks: usize,
    pub retransmissions: usize,
    pub delivered: usize,
    pub dropped: usize,
    pub failed_blocks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PacketCounts {
    pub generated: usize,
    pub queued: usize,
    pub in_flight: usize,
    pub delivered: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone)]
struct UserMac {
    queue: VecDeque<usize>,
    procs: Vec<HarqProcess>,
}

#[derive(Debug, Clone)]
pub struct Mac {
    harq: HarqConfig,
    packet_bits: u32,
    tti_s: f64,
    users: Vec<UserMac>,
    packets: Vec<Packet>,
    feedback: Vec<FeedbackEvent>,
    counts: PacketCounts,
}

impl Mac {
    pub fn new(num_users: usize, harq: HarqConfig, packet_bits: u32, tti_s: f64) -> Self {
        let users = (0..num_users)
            .map(|_| UserMac {
                queue: VecDeque::new(),
                procs: (0..harq.processes).map(HarqProcess::idle).collect(),
            })
            .collect();
        Self {
            harq,
            packet_bits,
            tti_s,
            users,
            packets: Vec::new(),
            feedback: Vec::new(),
            counts: PacketCounts::default(),
        }
    }

    pub fn packets(&self) -> &[Packet] {
        &self.packets
    }

    pub fn feedback_log(&self) -> &[FeedbackEvent] {
        &self.feedback
    }

    pub fn counts(&self) -> PacketCounts {
        self.counts
    }

    pub fn queue_len(&self, user: usize) -> usize {
        self.users[user].queue.len()
    }

    pub fn harq_processes(&self, user: usize) -> &[HarqProcess] {
        &self.users[user].procs
    }

    /// Enqueues `count` packets for `user` created at `tti`.
    pub fn enqueue(&mut self, user: usize, tti: u32, count: usize) {
        for _ in 0..count {
            let id = self.packets.len();
            self.packets.push(Packet {
                id,
                user,
                created_tti: tti,
                delivered_tti: None,
                dropped_tti: None,
                state: PacketState::Queued,
                retx_count: 0,
            });
            self.users[user].queue.push_back(id);
        }
        self.counts.generated += count;
        self.counts.queued += count;
    }

    /// Draws Poisson arrivals for every user; returns the number created.
    pub fn generate_traffic<R: Rng + ?Sized>(&mut self, rng: &mut R, offered_load_bps: f64, tti: u32) -> usize {
        let n = self.users.len();
        let mean = arrival_mean(offered_load_bps, n, self.tti_s, self.packet_bits);
        if !(mean > 0.0) {
            return 0;
        }
        let dist = Poisson::new(mean).expect("positive finite mean");
        let mut total = 0;
        for u in 0..n {
            let k = dist.sample(rng) as usize;
            self.enqueue(u, tti, k);
            total += k;
        }
        total
    }

    /// Whole packets a block can carry at the estimated SINR.
    pub fn block_capacity(&self, link: &LinkInput) -> usize {
        let bits = link.bandwidth_hz * (1.0 + link.gamma_est).log2() * self.tti_s;
        if !(bits > 0.0) {
            return 0;
        }
        (bits / self.packet_bits as f64).floor() as usize
    }

    /// Runs HARQ feedback and one transmission opportunity per served user.
    /// `links[u]` is `None` when user `u` is not scheduled this TTI.
    pub fn transmit_tti(&mut self, tti: u32, links: &[Option<LinkInput>]) -> Result<TtiReport> {
        if links.len() != self.users.len() {
            return Err(Error::DimensionMismatch {
                expected: self.users.len(),
                actual: links.len(),
            });
        }
        let mut report = TtiReport::default();
        for (u, link) in links.iter().enumerate() {
            let retx = self.process_feedback(u, tti, &mut report);
            let Some(link) = link else {
                // an unscheduled NACKed block loses its retransmission slot
                if let Some(p) = retx {
                    self.drop_block(u, p, tti, &mut report);
                }
                continue;
            };
            if let Some(p) = retx {
                self.retransmit(u, p, tti, link.gamma, &mut report);
            } else {
                self.send_new_block(u, tti, link, &mut report);
            }
        }
        Ok(report)
    }

    /// Handles feedback due at `tti`; returns a process to retransmit, if any.
    fn process_feedback(&mut self, u: usize, tti: u32, report: &mut TtiReport) -> Option<usize> {
        let rtt = self.harq.round_trip_ttis;
        let mut retx = None;
        for p in 0..self.users[u].procs.len() {
            let proc = &self.users[u].procs[p];
            if !proc.awaiting_feedback || proc.tx_tti + rtt != tti {
                continue;
            }
            let ack = proc.decoded;
            self.feedback.push(FeedbackEvent {
                user: u,
                process: p,
                tx_tti: proc.tx_tti,
                feedback_tti: tti,
                ack,
            });
            if ack {
                self.users[u].procs[p] = HarqProcess::idle(p);
            } else if proc.retx_count < self.harq.max_retransmissions && retx.is_none() {
                retx = Some(p);
            } else {
                self.drop_block(u, p, tti, report);
            }
        }
        retx
    }

    fn drop_block(&mut self, u: usize, p: usize, tti: u32, report: &mut TtiReport) {
        let proc = core::mem::replace(&mut self.users[u].procs[p], HarqProcess::idle(p));
        for id in proc.packets {
            let pkt = &mut self.packets[id];
            pkt.state = PacketState::Dropped;
            pkt.dropped_tti = Some(tti);
            self.counts.in_flight -= 1;
            self.counts.dropped += 1;
            report.dropped += 1;
        }
    }

    fn retransmit(&mut self, u: usize, p: usize, tti: u32, gamma: f64, report: &mut TtiReport) {
        let soft = self.harq.soft_combining;
        let proc = &mut self.users[u].procs[p];
        proc.tx_tti = tti;
        proc.retx_count += 1;
        proc.accumulated_sinr = if soft { proc.accumulated_sinr + gamma } else { gamma };
        proc.decoded = proc.accumulated_sinr >= proc.required_sinr;
        let (decoded, retx_count) = (proc.decoded, proc.retx_count);
        report.retransmissions += 1;
        for i in 0..self.users[u].procs[p].packets.len() {
            let id = self.users[u].procs[p].packets[i];
            self.packets[id].retx_count = retx_count;
        }
        if decoded {
            self.deliver(u, p, tti, report);
        } else {
            report.failed_blocks += 1;
        }
    }

    fn send_new_block(&mut self, u: usize, tti: u32, link: &LinkInput, report: &mut TtiReport) {
        if self.users[u].queue.is_empty() {
            return;
        }
        let Some(p) = self.users[u].procs.iter().position(|p| !p.awaiting_feedback) else {
            return;
        };
        let n = self.block_capacity(link).min(self.users[u].queue.len());
        if n == 0 {
            return;
        }
        let packets: Vec<usize> = self.users[u].queue.drain(..n).collect();
        for &id in &packets {
            self.packets[id].state = PacketState::InFlight;
        }
        self.counts.queued -= n;
        self.counts.in_flight += n;
        let decoded = link.gamma >= link.gamma_est;
        self.users[u].procs[p] = HarqProcess {
            id: p,
            packets,
            tx_tti: tti,
            retx_count: 0,
            required_sinr: link.gamma_est,
            accumulated_sinr: link.gamma,
            decoded,
            awaiting_feedback: true,
        };
        report.new_blocks += 1;
        if decoded {
            self.deliver(u, p, tti, report);
        } else {
            report.failed_blocks += 1;
        }
    }

    fn deliver(&mut self, u: usize, p: usize, tti: u32, report: &mut TtiReport) {
        let packets = core::mem::take(&mut self.users[u].procs[p].packets);
        for &id in &packets {
            let pkt = &mut self.packets[id];
            pkt.state = PacketState::Delivered;
            pkt.delivered_tti = Some(tti);
        }
        self.counts.in_flight -= packets.len();
        self.counts.delivered += packets.len();
        report.delivered += packets.len();
    }

    /// Independent recount of packet states, for conservation checks.
    pub fn recount(&self) -> PacketCounts {
        let mut c = PacketCounts {
            generated: self.packets.len(),
            ..PacketCounts::default()
        };
        for p in &self.packets {
            match p.state {
                PacketState::Queued => c.queued += 1,
                PacketState::InFlight => c.in_flight += 1,
                PacketState::Delivered => c.delivered += 1,
                PacketState::Dropped => c.dropped += 1,
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TTI: f64 = 0.1429e-3;

    fn mac(users: usize) -> Mac {
        Mac::new(users, HarqConfig::default(), 256, TTI)
    }

    fn link(gamma: f64, est: f64) -> Option<LinkInput> {
        Some(LinkInput {
            gamma,
            gamma_est: est,
            bandwidth_hz: 20e6,
        })
    }

    #[test]
    fn zero_load_creates_nothing() {
        let mut m = mac(9);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for t in 1..=1000 {
            assert_eq!(m.generate_traffic(&mut rng, 0.0, t), 0);
        }
        assert_eq!(m.counts().generated, 0);
    }

    #[test]
    fn per_user_share_of_offered_load() {
        let per_user_bps = arrival_mean(0.5e6, 9, TTI, 256) * 256.0 / TTI;
        assert!((per_user_bps - 0.5e6 / 9.0).abs() < 1e-6);
        assert!((per_user_bps / 1e6 - 0.0555).abs() < 1e-3);
    }

    #[test]
    fn long_run_arrivals_match_mean() {
        let mut m = mac(1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ttis = 100_000;
        for t in 1..=ttis {
            m.generate_traffic(&mut rng, 2e6, t);
        }
        let expected = arrival_mean(2e6, 1, TTI, 256) * ttis as f64;
        let got = m.counts().generated as f64;
        assert!((got / expected - 1.0).abs() < 0.01, "{got} vs {expected}");
    }

    #[test]
    fn static_link_never_fails() {
        let mut m = mac(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t in 1..=2000 {
            m.generate_traffic(&mut rng, 1e6, t);
            let r = m.transmit_tti(t, &[link(50.0, 50.0), link(3.0, 3.0)]).unwrap();
            assert_eq!(r.failed_blocks, 0);
        }
        assert_eq!(m.counts().dropped, 0);
        assert!(m.counts().delivered > 0);
    }

    #[test]
    fn first_attempt_latency_is_one_tti() {
        let mut m = mac(1);
        m.enqueue(0, 5, 1);
        m.transmit_tti(5, &[link(10.0, 10.0)]).unwrap();
        let p = &m.packets()[0];
        assert_eq!(p.delivered_tti, Some(5));
        assert_eq!(p.latency_ttis(), Some(1));
    }

    #[test]
    fn failed_block_retransmits_after_round_trip() {
        let mut m = mac(1);
        m.enqueue(0, 1, 1);
        m.transmit_tti(1, &[link(5.0, 10.0)]).unwrap();
        assert_eq!(m.packets()[0].state, PacketState::InFlight);
        for t in 2..5 {
            m.transmit_tti(t, &[link(5.0, 10.0)]).unwrap();
        }
        let r = m.transmit_tti(5, &[link(10.0, 10.0)]).unwrap();
        assert_eq!(r.retransmissions, 1);
        let p = &m.packets()[0];
        assert_eq!(p.latency_ttis(), Some(5));
        assert_eq!(p.retx_count, 1);
        assert_eq!(m.feedback_log()[0].feedback_tti, 5);
        assert!(!m.feedback_log()[0].ack);
    }

    #[test]
    fn combined_attempts_can_decode() {
        let mut m = mac(1);
        m.enqueue(0, 1, 1);
        m.transmit_tti(1, &[link(6.0, 10.0)]).unwrap();
        for t in 2..5 {
            m.transmit_tti(t, &[link(6.0, 10.0)]).unwrap();
        }
        // 6 + 6 reaches the requirement of 10 only when combined
        m.transmit_tti(5, &[link(6.0, 10.0)]).unwrap();
        assert_eq!(m.packets()[0].state, PacketState::Delivered);

        let harq = HarqConfig {
            soft_combining: false,
            ..HarqConfig::default()
        };
        let mut m = Mac::new(1, harq, 256, TTI);
        m.enqueue(0, 1, 1);
        for t in 1..=9 {
            m.transmit_tti(t, &[link(6.0, 10.0)]).unwrap();
        }
        assert_eq!(m.packets()[0].state, PacketState::Dropped);
    }

    #[test]
    fn block_failing_its_retransmission_is_dropped() {
        let mut m = mac(1);
        m.enqueue(0, 1, 2);
        for t in 1..=9 {
            m.transmit_tti(t, &[link(1.0, 10.0)]).unwrap();
        }
        let c = m.counts();
        assert_eq!(c.dropped, 2);
        assert_eq!(c.delivered, 0);
        assert_eq!(m.packets()[0].dropped_tti, Some(9));
    }

    #[test]
    fn tiny_sinr_carries_no_whole_packet() {
        let m = mac(1);
        let l = LinkInput {
            gamma: 1e-6,
            gamma_est: 1e-6,
            bandwidth_hz: 20e6,
        };
        assert_eq!(m.block_capacity(&l), 0);
    }

    #[test]
    fn all_processes_busy_blocks_new_transmissions() {
        let harq = HarqConfig {
            processes: 1,
            ..HarqConfig::default()
        };
        let mut m = Mac::new(1, harq, 256, TTI);
        m.enqueue(0, 1, 100);
        let r1 = m.transmit_tti(1, &[link(1.0, 1.0)]).unwrap();
        let r2 = m.transmit_tti(2, &[link(1.0, 1.0)]).unwrap();
        assert_eq!(r1.new_blocks, 1);
        assert_eq!(r2.new_blocks, 0);
        let r5 = m.transmit_tti(5, &[link(1.0, 1.0)]).unwrap();
        assert_eq!(r5.new_blocks, 1);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mut m = mac(2);
        assert!(m.transmit_tti(1, &[None]).is_err());
    }

    proptest! {
        #[test]
        fn conservation_and_feedback_timing(
            seed in any::<u64>(),
            load in 0.0f64..20e6,
            jitter in 0.0f64..0.5,
        ) {
            let users = 3;
            let mut m = mac(users);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut prev = vec![1.0; users];
            for t in 1..=300u32 {
                m.generate_traffic(&mut rng, load, t);
                let links: Vec<Option<LinkInput>> = (0..users)
                    .map(|u| {
                        let g = 2.0 * (1.0 + jitter * (rng.random::<f64>() - 0.5));
                        let l = LinkInput { gamma: g, gamma_est: prev[u], bandwidth_hz: 20e6 };
                        prev[u] = g;
                        if u == 2 && t % 7 == 0 { None } else { Some(l) }
                    })
                    .collect();
                m.transmit_tti(t, &links).unwrap();
                let c = m.counts();
                prop_assert_eq!(c, m.recount());
                prop_assert_eq!(c.generated, c.queued + c.in_flight + c.delivered + c.dropped);
            }
            for e in m.feedback_log() {
                prop_assert_eq!(e.feedback_tti, e.tx_tti + 4);
            }
            for p in m.packets() {
                if let Some(d) = p.delivered_tti {
                    prop_assert!(d >= p.created_tti);
                }
                prop_assert!(p.retx_count <= 1);
            }
        }
    }
}
