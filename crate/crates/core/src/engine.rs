//! The TTI loop. One call to [`Simulation::run`] draws a deployment, then for
//! every TTI: generates traffic, lets the algorithm pick powers and
//! associations, clusters each cell into beams, evaluates SINR, transmits,
//! and feeds the measured SINR back to the agents.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;

use crate::agent::{AgentState, QAgent, RewardScope, UePriorityList, ue_associate};
use crate::baseline;
use crate::config::SimConfig;
use crate::deployment::{self, BeamCluster, IntersectionSet, Topology};
use crate::error::{Error, Result};
use crate::interference::{self, BeamState, NetworkState};
use crate::mac::{FeedbackEvent, LinkInput, Mac, Packet};
use crate::metrics::{self, MetricsRecord};
use crate::noma;
use crate::phy::{self, ChannelTable};
use crate::rng::{self, Stream};
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Algorithm {
    QLearning,
    Upa,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::QLearning => "qlearning",
            Algorithm::Upa => "upa",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qlearning" => Ok(Algorithm::QLearning),
            "upa" => Ok(Algorithm::Upa),
            other => Err(Error::invalid(
                "algorithm",
                alloc::format!("unknown algorithm `{other}` (expected qlearning or upa)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub seed: u64,
    pub algorithm: Algorithm,
    pub offered_load_mbps: f64,
    /// Overrides the configured user count when set.
    pub num_users: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Keep a per-TTI, per-link SINR table.
    pub record_links: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentTraceRow {
    pub tti: u32,
    pub gnb: usize,
    pub state: AgentState,
    pub action: usize,
    /// Reward earned by this TTI's action.
    pub reward: f64,
    /// Average SINR the agent measured after this TTI's transmission.
    pub avg_sinr_db: f64,
    pub cumulative_avg_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkRow {
    pub tti: u32,
    pub gnb: usize,
    pub beam: usize,
    pub user: usize,
    pub signal_w: f64,
    pub intra_w: f64,
    pub inter_w: f64,
    pub sinr_db: f64,
    pub rate_bps: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub spec: RunSpec,
    pub topology: Topology,
    pub intersection: IntersectionSet,
    pub metrics: MetricsRecord,
    pub packets: Vec<Packet>,
    pub feedback: Vec<FeedbackEvent>,
    /// One row per (TTI, gNB), TTI-major. Empty for the baseline.
    pub agent_trace: Vec<AgentTraceRow>,
    pub links: Vec<LinkRow>,
    /// Largest |Q| seen in any table at any TTI.
    pub max_abs_q: f64,
    /// Actions excluded by the power cap, per agent.
    pub masked_actions: Vec<usize>,
    /// Users whose serving gNB changed at least once.
    pub reassociations: usize,
    /// Beam weights whose NOMA gain had to be clamped, summed over TTIs.
    pub clamped_beams: usize,
}

impl RunOutput {
    /// Reward series of one agent, indexed by TTI − 1.
    pub fn rewards(&self, gnb: usize) -> Vec<f64> {
        self.agent_trace.iter().filter(|r| r.gnb == gnb).map(|r| r.reward).collect()
    }
}

pub struct Simulation<'c> {
    cfg: &'c SimConfig,
}

impl<'c> Simulation<'c> {
    pub fn new(cfg: &'c SimConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &SimConfig {
        self.cfg
    }

    /// Draws the deployment and channels a run with `seed` would use.
    pub fn deploy(&self, seed: u64, num_users: Option<usize>) -> Result<(Topology, ChannelTable)> {
        let cfg = self.cfg;
        let fixed = num_users.or(cfg.simulation.num_users);
        let topo = deployment::draw_topology(
            &mut rng::stream(seed, Stream::Topology),
            &cfg.deployment.pcp(fixed),
            cfg.deployment.num_gnbs,
            cfg.deployment.inter_gnb_distance_m,
        )?;
        let channels = deployment::draw_channels(&mut rng::stream(seed, Stream::Channel), &topo, &cfg.phy);
        Ok((topo, channels))
    }

    pub fn run(&self, spec: RunSpec, opts: RunOptions) -> Result<RunOutput> {
        let cfg = self.cfg;
        if !(spec.offered_load_mbps >= 0.0 && spec.offered_load_mbps.is_finite()) {
            return Err(Error::invalid("offered_load_mbps", "must be finite and non-negative"));
        }
        let (topology, channels) = self.deploy(spec.seed, spec.num_users)?;
        let nu = channels.num_users();
        let ng = channels.num_gnbs();
        let k = cfg.deployment.beams_per_gnb;
        let isect = deployment::find_intersection_users(&channels, cfg.deployment.intersection_rule());
        let tti_s = cfg.simulation.tti_s();
        let ttis = cfg.simulation.ttis;
        let p_max = cfg.phy.max_tx_power_w();
        let subband = cfg.interference.subband_matched;
        let link_bw = interference::link_bandwidth(cfg.phy.bandwidth_hz, k, subband);
        let load_bps = spec.offered_load_mbps * 1e6;

        let mut traffic_rng = rng::stream(spec.seed, Stream::Traffic);
        let mut mac = Mac::new(nu, cfg.harq.clone(), cfg.traffic.packet_bits(), tti_s);

        let mut agents: Vec<QAgent> = match spec.algorithm {
            Algorithm::QLearning => (0..ng)
                .map(|j| QAgent::new(j, isect.per_gnb[j].clone(), k, cfg.qlearning.clone(), p_max))
                .collect(),
            Algorithm::Upa => Vec::new(),
        };
        let mut agent_rngs: Vec<_> = (0..agents.len()).map(|j| rng::stream(spec.seed, Stream::Agent(j))).collect();
        let mut reported_db: Vec<Option<f64>> = vec![None; agents.len()];

        // gNBs each intersection user may be served by
        let mut candidates: Vec<Vec<usize>> = vec![Vec::new(); nu];
        for (j, users) in isect.per_gnb.iter().enumerate() {
            for &u in users {
                candidates[u].push(j);
            }
        }

        let mut attach = isect.home.clone();
        let initial_attach = attach.clone();
        let mut ever_moved = vec![false; nu];
        // last-interval SINR estimates per (user, gNB); long-term power before any transmission
        let mut estimates: Vec<Vec<f64>> = (0..nu)
            .map(|u| (0..ng).map(|j| channels.channel(u, j).norm_sqr()).collect())
            .collect();
        let mut last_sinr: Vec<Option<f64>> = vec![None; nu];
        let mut planner = BeamPlanner::new(cfg, &channels, spec.seed);

        let mut trace: Vec<AgentTraceRow> = Vec::with_capacity(agents.len() * ttis as usize);
        let mut links_out = Vec::new();
        let mut max_abs_q: f64 = 0.0;
        let mut clamped_beams = 0;

        for t in 1..=ttis {
            mac.generate_traffic(&mut traffic_rng, load_bps, t);

            // power per (gNB, beam index) and association
            let mut powers_w: Vec<Vec<f64>> = Vec::with_capacity(ng);
            match spec.algorithm {
                Algorithm::QLearning => {
                    let mut proposals = vec![vec![None; ng]; nu];
                    let prev_rows = trace.len().saturating_sub(ng);
                    for (j, agent) in agents.iter_mut().enumerate() {
                        let d = agent.scheduling_step(reported_db[j], t, &mut agent_rngs[j]);
                        if let Some(r) = d.reward {
                            trace[prev_rows + j].reward = r;
                        }
                        for (i, &u) in agent.users.iter().enumerate() {
                            proposals[u][j] = Some(d.proposals[i]);
                        }
                        powers_w.push(d.beam_powers_dbm.iter().map(|&p| units::dbm_to_watts(p)).collect());
                        trace.push(AgentTraceRow {
                            tti: t,
                            gnb: j,
                            state: d.state,
                            action: d.action,
                            reward: f64::NAN,
                            avg_sinr_db: f64::NAN,
                            cumulative_avg_reward: f64::NAN,
                        });
                    }
                    for u in 0..nu {
                        if candidates[u].is_empty() {
                            continue;
                        }
                        let est: Vec<f64> = (0..ng)
                            .map(|j| {
                                if candidates[u].contains(&j) {
                                    estimates[u][j]
                                } else {
                                    f64::NEG_INFINITY
                                }
                            })
                            .collect();
                        attach[u] = ue_associate(&UePriorityList::from_estimates(&est), &proposals[u]);
                    }
                }
                Algorithm::Upa => {
                    for u in 0..nu {
                        if candidates[u].is_empty() {
                            continue;
                        }
                        let est: Vec<f64> = (0..ng)
                            .map(|j| {
                                if candidates[u].contains(&j) {
                                    estimates[u][j]
                                } else {
                                    f64::NEG_INFINITY
                                }
                            })
                            .collect();
                        attach[u] = baseline::sinr_priority_association(&est);
                    }
                }
            }
            for u in 0..nu {
                if attach[u] != initial_attach[u] {
                    ever_moved[u] = true;
                }
            }

            let plan = match spec.algorithm {
                Algorithm::QLearning => PowerPlan::PerBeam(&powers_w),
                Algorithm::Upa => PowerPlan::Uniform(p_max),
            };
            let (state, clamped) = planner.network(&attach, plan)?;
            clamped_beams += clamped;
            let evals = interference::evaluate(&state);
            let mut sinr_now = vec![f64::NAN; nu];
            for e in &evals {
                sinr_now[e.user] = e.sinr.gamma;
            }

            let inputs: Vec<Option<LinkInput>> = (0..nu)
                .map(|u| {
                    let gamma = sinr_now[u];
                    Some(LinkInput {
                        gamma,
                        gamma_est: last_sinr[u].unwrap_or(gamma),
                        bandwidth_hz: link_bw,
                    })
                })
                .collect();
            mac.transmit_tti(t, &inputs)?;

            if opts.record_links {
                for e in &evals {
                    links_out.push(LinkRow {
                        tti: t,
                        gnb: e.gnb,
                        beam: e.beam_index,
                        user: e.user,
                        signal_w: e.sinr.signal,
                        intra_w: e.sinr.intra,
                        inter_w: e.sinr.inter,
                        sinr_db: units::linear_to_db(e.sinr.gamma),
                        rate_bps: link_bw * (1.0 + e.sinr.gamma).log2(),
                    });
                }
            }

            // measurements reported for the next interval
            for u in 0..nu {
                last_sinr[u] = Some(sinr_now[u]);
                for j in 0..ng {
                    estimates[u][j] = interference::reference_sinr(&state, u, j);
                }
            }
            for (j, agent) in agents.iter().enumerate() {
                let avg = agent_avg_sinr(&isect, &attach, &sinr_now, j, cfg.qlearning.reward_scope);
                let db = units::linear_to_db(avg);
                reported_db[j] = Some(db);
                let idx = trace.len() - ng + j;
                trace[idx].avg_sinr_db = db;
                max_abs_q = max_abs_q.max(agent.q.max_abs());
            }
        }

        // credit the final interval's actions
        for (j, agent) in agents.iter_mut().enumerate() {
            if let Some(r) = reported_db[j].and_then(|db| agent.observe(db)) {
                let idx = trace.len() - ng + j;
                trace[idx].reward = r;
            }
            max_abs_q = max_abs_q.max(agent.q.max_abs());
        }
        for j in 0..agents.len() {
            let rewards: Vec<f64> = trace.iter().filter(|r| r.gnb == j).map(|r| r.reward).collect();
            let cum = metrics::cumulative_average(&rewards);
            for (row, c) in trace.iter_mut().filter(|r| r.gnb == j).zip(cum) {
                row.cumulative_avg_reward = c;
            }
        }

        let metrics = metrics::account_metrics(mac.packets(), cfg.traffic.packet_bits(), ttis, tti_s)?;
        let counts = mac.counts();
        debug_assert_eq!(counts, mac.recount());

        Ok(RunOutput {
            spec,
            topology,
            intersection: isect,
            metrics,
            packets: mac.packets().to_vec(),
            feedback: mac.feedback_log().to_vec(),
            agent_trace: trace,
            links: links_out,
            max_abs_q,
            masked_actions: agents.iter().map(QAgent::masked_actions).collect(),
            reassociations: ever_moved.iter().filter(|&&m| m).count(),
            clamped_beams,
        })
    }
}

/// How beam powers are set when building a network snapshot.
#[derive(Debug, Clone, Copy)]
pub enum PowerPlan<'p> {
    /// Watts per (gNB, beam index).
    PerBeam(&'p [Vec<f64>]),
    /// Each gNB splits this total evenly over the beams it forms.
    Uniform(f64),
}

/// Turns an association into beams: clusters each cell, points the beams,
/// and splits beam power among members. Clusterings are cached per member
/// set; each is computed from a fresh per-cell stream, so the result does not
/// depend on cache state.
pub struct BeamPlanner<'a> {
    cfg: &'a SimConfig,
    channels: &'a ChannelTable,
    seed: u64,
    cache: BTreeMap<(usize, Vec<usize>), Vec<BeamCluster>>,
}

impl<'a> BeamPlanner<'a> {
    pub fn new(cfg: &'a SimConfig, channels: &'a ChannelTable, seed: u64) -> Self {
        Self {
            cfg,
            channels,
            seed,
            cache: BTreeMap::new(),
        }
    }

    pub fn clusters(&mut self, gnb: usize, members: Vec<usize>) -> &[BeamCluster] {
        let (cfg, channels, seed) = (self.cfg, self.channels, self.seed);
        self.cache.entry((gnb, members)).or_insert_with_key(|(j, members)| {
            deployment::cluster_gnb(
                channels,
                *j,
                members,
                cfg.deployment.beams_per_gnb,
                cfg.deployment.kmeans_max_iterations,
                &mut rng::stream(seed, Stream::Clustering(*j)),
            )
        })
    }

    /// Builds the snapshot for `attach` (serving gNB per user). Also returns
    /// how many beams needed gain clamping in the NOMA split.
    pub fn network(&mut self, attach: &[usize], plan: PowerPlan<'_>) -> Result<(NetworkState<'a>, usize)> {
        let cfg = self.cfg;
        let channels = self.channels;
        let policy = cfg.noma.power_policy();
        let mut beams: Vec<BeamState> = Vec::new();
        let mut clamped = 0;
        for j in 0..channels.num_gnbs() {
            let members: Vec<usize> = (0..attach.len()).filter(|&u| attach[u] == j).collect();
            if members.is_empty() {
                continue;
            }
            let clusters = self.clusters(j, members);
            let active = clusters.len();
            for (b, c) in clusters.iter().enumerate() {
                let power_w = match plan {
                    PowerPlan::PerBeam(p) => p[j][b],
                    // cells with fewer users than beams split over the beams they use
                    PowerPlan::Uniform(total) => baseline::upa_powers(total, active)[b],
                };
                let weight = phy::beamforming_weight(c.centroid_aod, &cfg.phy);
                let gains: Vec<f64> = c
                    .members
                    .iter()
                    .map(|&u| phy::effective_gain(channels.channel(u, j), &weight))
                    .collect::<Result<_>>()?;
                let split = noma::intra_beam_power(&gains, &c.members, policy);
                if split.clamped {
                    clamped += 1;
                }
                let order = noma::decoding_order(&gains, &c.members, cfg.noma.sic_order);
                beams.push(BeamState {
                    gnb: j,
                    index: b,
                    power_w,
                    weight,
                    members: c.members.clone(),
                    beta: split.beta,
                    ranks: order.ranks,
                });
            }
        }
        let state = NetworkState {
            channels,
            beams,
            noise_w: cfg.phy.noise_w(),
            subband_matched: cfg.interference.subband_matched,
        };
        Ok((state, clamped))
    }
}

/// Mean linear SINR that drives agent `gnb`: its intersection users wherever
/// they are served, or every user it serves. With no intersection users the
/// agent falls back to the users it serves.
fn agent_avg_sinr(
    isect: &IntersectionSet,
    attach: &[usize],
    sinr: &[f64],
    gnb: usize,
    scope: RewardScope,
) -> f64 {
    let users: Vec<usize> = match scope {
        RewardScope::Intersection if !isect.per_gnb[gnb].is_empty() => isect.per_gnb[gnb].clone(),
        _ => (0..attach.len()).filter(|&u| attach[u] == gnb).collect(),
    };
    if users.is_empty() {
        return 0.0;
    }
    users.iter().map(|&u| sinr[u]).sum::<f64>() / users.len() as f64
}
