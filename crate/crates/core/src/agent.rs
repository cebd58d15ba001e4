//! Per-gNB tabular Q-learning for joint user-cell association and inter-beam
//! power allocation, and the UE-side priority-list association rule.
//!
//! Each agent has two states (average SINR at or above the threshold, or
//! not) and a joint action made of one association bit per shared edge user
//! and one power level per beam. Actions are packed mixed-radix: association
//! bits most significant (first user highest), then one power digit per beam
//! (first beam highest).

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RewardScope {
    /// Average over the agent's intersection-region users.
    #[default]
    Intersection,
    /// Average over every user the gNB serves.
    AllUsers,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AgentConfig {
    pub learning_rate: f64,
    pub discount: f64,
    pub exploration: f64,
    /// Epsilon-greedy applies for TTIs `1..=exploration_horizon`, greedy after.
    pub exploration_horizon: u32,
    pub sinr_threshold_db: f64,
    pub power_levels_dbm: Vec<f64>,
    pub reward_scope: RewardScope,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            discount: 0.9,
            exploration: 0.1,
            exploration_horizon: 2000,
            sinr_threshold_db: 20.0,
            power_levels_dbm: vec![0.0, 2.0, 4.0, 6.0, 8.0],
            reward_scope: RewardScope::Intersection,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::invalid("qlearning.learning_rate", "must lie in (0, 1]"));
        }
        if !(self.discount >= 0.0 && self.discount < 1.0) {
            return Err(Error::invalid("qlearning.discount", "must lie in [0, 1)"));
        }
        if !(self.exploration >= 0.0 && self.exploration <= 1.0) {
            return Err(Error::invalid("qlearning.exploration", "must lie in [0, 1]"));
        }
        if !self.sinr_threshold_db.is_finite() {
            return Err(Error::invalid("qlearning.sinr_threshold_db", "must be finite"));
        }
        if self.power_levels_dbm.is_empty() {
            return Err(Error::invalid("qlearning.power_levels_dbm", "must not be empty"));
        }
        if !self.power_levels_dbm.iter().all(|p| p.is_finite())
            || self.power_levels_dbm.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::invalid(
                "qlearning.power_levels_dbm",
                "must be finite and strictly increasing",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionVector {
    /// Association proposal per intersection user, in the agent's user order.
    pub associate: Vec<bool>,
    /// Power level index per beam.
    pub powers: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionSpace {
    pub num_assoc: usize,
    pub num_levels: usize,
    pub num_beams: usize,
}

impl ActionSpace {
    pub fn size(&self) -> usize {
        (1usize << self.num_assoc) * self.num_levels.pow(self.num_beams as u32)
    }

    pub fn encode(&self, a: &ActionVector) -> Result<usize> {
        if a.associate.len() != self.num_assoc {
            return Err(Error::DimensionMismatch {
                expected: self.num_assoc,
                actual: a.associate.len(),
            });
        }
        if a.powers.len() != self.num_beams {
            return Err(Error::DimensionMismatch {
                expected: self.num_beams,
                actual: a.powers.len(),
            });
        }
        let mut index = 0usize;
        for &bit in &a.associate {
            index = index * 2 + bit as usize;
        }
        for &p in &a.powers {
            if p >= self.num_levels {
                return Err(Error::ActionOutOfRange {
                    index: p,
                    size: self.num_levels,
                });
            }
            index = index * self.num_levels + p;
        }
        Ok(index)
    }

    pub fn decode(&self, index: usize) -> Result<ActionVector> {
        let size = self.size();
        if index >= size {
            return Err(Error::ActionOutOfRange { index, size });
        }
        let mut rest = index;
        let mut powers = vec![0; self.num_beams];
        for p in powers.iter_mut().rev() {
            *p = rest % self.num_levels;
            rest /= self.num_levels;
        }
        let mut associate = vec![false; self.num_assoc];
        for bit in associate.iter_mut().rev() {
            *bit = rest % 2 == 1;
            rest /= 2;
        }
        Ok(ActionVector { associate, powers })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentState {
    /// Average SINR at or above threshold.
    S0,
    S1,
}

impl AgentState {
    pub const COUNT: usize = 2;

    pub fn index(self) -> usize {
        match self {
            AgentState::S0 => 0,
            AgentState::S1 => 1,
        }
    }
}

pub fn observe_state(avg_sinr_db: f64, threshold_db: f64) -> AgentState {
    if avg_sinr_db >= threshold_db {
        AgentState::S0
    } else {
        AgentState::S1
    }
}

pub fn compute_reward(avg_sinr_db: f64, threshold_db: f64) -> f64 {
    if avg_sinr_db >= threshold_db {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(num_actions: usize) -> Self {
        Self {
            num_actions,
            values: vec![0.0; AgentState::COUNT * num_actions],
        }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Total entry count (states × actions).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, s: AgentState, a: usize) -> f64 {
        self.values[s.index() * self.num_actions + a]
    }

    pub fn set(&mut self, s: AgentState, a: usize, v: f64) {
        self.values[s.index() * self.num_actions + a] = v;
    }

    pub fn row(&self, s: AgentState) -> &[f64] {
        let start = s.index() * self.num_actions;
        &self.values[start..start + self.num_actions]
    }

    pub fn max_value(&self, s: AgentState) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `q(s,a) ← q(s,a) + α [R + γ max_a' q(s',a') − q(s,a)]`
pub fn q_update(
    q: &mut QTable,
    s: AgentState,
    a: usize,
    reward: f64,
    s_next: AgentState,
    alpha: f64,
    gamma: f64,
) {
    let old = q.get(s, a);
    let target = reward + gamma * q.max_value(s_next);
    q.set(s, a, old + alpha * (target - old));
}

/// Epsilon-greedy over the allowed actions while `tti` is inside the
/// exploration horizon, greedy afterwards. Ties among maximizers are broken
/// uniformly at random.
pub fn select_action<R: Rng + ?Sized>(
    q: &QTable,
    s: AgentState,
    tti: u32,
    cfg: &AgentConfig,
    allowed: &[bool],
    rng: &mut R,
) -> usize {
    debug_assert_eq!(allowed.len(), q.num_actions());
    let candidates: Vec<usize> = (0..q.num_actions()).filter(|&a| allowed[a]).collect();
    let explore = tti <= cfg.exploration_horizon && rng.random::<f64>() < cfg.exploration;
    if explore {
        return candidates[rng.random_range(0..candidates.len())];
    }
    let row = q.row(s);
    let best = candidates.iter().map(|&a| row[a]).fold(f64::NEG_INFINITY, f64::max);
    let maximizers: Vec<usize> = candidates.into_iter().filter(|&a| row[a] == best).collect();
    if maximizers.len() == 1 {
        maximizers[0]
    } else {
        maximizers[rng.random_range(0..maximizers.len())]
    }
}

/// Outcome of one scheduling interval of an agent.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulingDecision {
    /// Reward credited to the previous interval's action, if one was observed.
    pub reward: Option<f64>,
    pub state: AgentState,
    pub action: usize,
    /// Association proposals, aligned with the agent's intersection users.
    pub proposals: Vec<bool>,
    pub beam_powers_dbm: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct QAgent {
    pub gnb: usize,
    /// Intersection users this agent proposes for, ascending.
    pub users: Vec<usize>,
    pub space: ActionSpace,
    pub q: QTable,
    pub state: AgentState,
    pub action: Option<usize>,
    allowed: Vec<bool>,
    masked: usize,
    cfg: AgentConfig,
}

impl QAgent {
    /// Builds an agent with a zeroed table starting in `S1`. Actions whose
    /// summed beam power exceeds `max_power_w` are masked out.
    pub fn new(gnb: usize, users: Vec<usize>, num_beams: usize, cfg: AgentConfig, max_power_w: f64) -> Self {
        let space = ActionSpace {
            num_assoc: users.len(),
            num_levels: cfg.power_levels_dbm.len(),
            num_beams,
        };
        let size = space.size();
        let level_w: Vec<f64> = cfg.power_levels_dbm.iter().map(|&p| units::dbm_to_watts(p)).collect();
        let mut allowed: Vec<bool> = (0..size)
            .map(|a| {
                let v = space.decode(a).expect("index within space");
                v.powers.iter().map(|&p| level_w[p]).sum::<f64>() <= max_power_w * (1.0 + 1e-12)
            })
            .collect();
        let mut masked = allowed.iter().filter(|&&ok| !ok).count();
        if masked == size {
            allowed.iter_mut().for_each(|a| *a = true);
            masked = 0;
        }
        Self {
            gnb,
            users,
            space,
            q: QTable::new(size),
            state: AgentState::S1,
            action: None,
            allowed,
            masked,
            cfg,
        }
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    /// Number of actions excluded by the per-gNB power cap.
    pub fn masked_actions(&self) -> usize {
        self.masked
    }

    /// Applies the reward for the last action and moves to the next state.
    /// Returns the reward, or `None` if no action has been taken yet.
    pub fn observe(&mut self, avg_sinr_db: f64) -> Option<f64> {
        let action = self.action?;
        let reward = compute_reward(avg_sinr_db, self.cfg.sinr_threshold_db);
        let next = observe_state(avg_sinr_db, self.cfg.sinr_threshold_db);
        q_update(
            &mut self.q,
            self.state,
            action,
            reward,
            next,
            self.cfg.learning_rate,
            self.cfg.discount,
        );
        self.state = next;
        Some(reward)
    }

    /// One scheduling interval: learn from the SINR reported for the previous
    /// interval (when there was one), then pick this interval's action.
    pub fn scheduling_step<R: Rng + ?Sized>(
        &mut self,
        reported_avg_sinr_db: Option<f64>,
        tti: u32,
        rng: &mut R,
    ) -> SchedulingDecision {
        let reward = reported_avg_sinr_db.and_then(|s| self.observe(s));
        let action = select_action(&self.q, self.state, tti, &self.cfg, &self.allowed, rng);
        self.action = Some(action);
        let v = self.space.decode(action).expect("selected action within space");
        SchedulingDecision {
            reward,
            state: self.state,
            action,
            beam_powers_dbm: v.powers.iter().map(|&p| self.cfg.power_levels_dbm[p]).collect(),
            proposals: v.associate,
        }
    }
}

/// gNBs ranked by a UE's SINR estimates, best first; ties by gNB id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UePriorityList {
    pub order: Vec<usize>,
}

impl UePriorityList {
    pub fn from_estimates(estimates: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..estimates.len()).collect();
        order.sort_by(|&a, &b| estimates[b].total_cmp(&estimates[a]).then(a.cmp(&b)));
        Self { order }
    }

    pub fn head(&self) -> usize {
        self.order[0]
    }
}

/// Keeps the gNBs that proposed to serve the UE and picks the best-ranked of
/// them. If every gNB declined, falls back to the head of the list.
/// `proposals[j]` is `None` for gNBs that do not negotiate over this UE.
pub fn ue_associate(priority: &UePriorityList, proposals: &[Option<bool>]) -> usize {
    priority
        .order
        .iter()
        .copied()
        .find(|&j| proposals.get(j).copied().flatten() == Some(true))
        .unwrap_or_else(|| priority.head())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference_space() -> ActionSpace {
        ActionSpace {
            num_assoc: 2,
            num_levels: 5,
            num_beams: 2,
        }
    }

    #[test]
    fn reference_cardinalities() {
        let space = reference_space();
        assert_eq!(space.size(), 100);
        assert_eq!(QTable::new(space.size()).len(), 200);
    }

    #[test]
    fn zero_action_encodes_to_zero() {
        let a = ActionVector {
            associate: vec![false, false],
            powers: vec![0, 0],
        };
        assert_eq!(reference_space().encode(&a).unwrap(), 0);
    }

    #[test]
    fn association_bits_are_most_significant() {
        let space = reference_space();
        let a = ActionVector {
            associate: vec![true, false],
            powers: vec![0, 3],
        };
        assert_eq!(space.encode(&a).unwrap(), 2 * 25 + 3);
        assert_eq!(space.decode(53).unwrap(), a);
    }

    #[test]
    fn exhaustive_round_trip() {
        let space = reference_space();
        let mut seen = vec![false; 100];
        for i in 0..100 {
            let v = space.decode(i).unwrap();
            assert_eq!(space.encode(&v).unwrap(), i);
            seen[i] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        assert_eq!(
            reference_space().decode(100),
            Err(Error::ActionOutOfRange { index: 100, size: 100 })
        );
    }

    #[test]
    fn three_level_space() {
        let space = ActionSpace {
            num_assoc: 2,
            num_levels: 3,
            num_beams: 2,
        };
        assert_eq!(space.size(), 36);
    }

    #[test]
    fn state_and_reward_thresholds() {
        assert_eq!(observe_state(25.0, 20.0), AgentState::S0);
        assert_eq!(observe_state(19.99, 20.0), AgentState::S1);
        assert_eq!(observe_state(20.0, 20.0), AgentState::S0);
        assert_eq!(compute_reward(25.0, 20.0), 1.0);
        assert_eq!(compute_reward(10.0, 20.0), -1.0);
        assert_eq!(compute_reward(20.0, 20.0), 1.0);
    }

    #[test]
    fn q_update_hand_values() {
        let mut q = QTable::new(4);
        q_update(&mut q, AgentState::S0, 2, 1.0, AgentState::S1, 0.5, 0.9);
        assert_eq!(q.get(AgentState::S0, 2), 0.5);

        let mut q = QTable::new(4);
        q.set(AgentState::S0, 1, 1.0);
        q.set(AgentState::S1, 3, 1.0);
        q_update(&mut q, AgentState::S0, 1, 1.0, AgentState::S1, 0.5, 0.9);
        assert!((q.get(AgentState::S0, 1) - 1.45).abs() < 1e-15);

        let before = q.clone();
        q_update(&mut q, AgentState::S1, 0, 1.0, AgentState::S0, 0.0, 0.9);
        assert_eq!(q, before);
    }

    #[test]
    fn forced_exploration_is_uniform() {
        let cfg = AgentConfig {
            exploration: 1.0,
            ..AgentConfig::default()
        };
        let q = QTable::new(100);
        let allowed = vec![true; 100];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let draws = 10_000;
        let mut counts = vec![0usize; 100];
        for _ in 0..draws {
            counts[select_action(&q, AgentState::S1, 1, &cfg, &allowed, &mut rng)] += 1;
        }
        let expected = draws as f64 / 100.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 99 dof, upper 0.1% point ≈ 148.2
        assert!(chi2 < 148.2, "chi2 {chi2}");
    }

    #[test]
    fn greedy_picks_unique_maximizer() {
        let cfg = AgentConfig {
            exploration: 0.0,
            ..AgentConfig::default()
        };
        let mut q = QTable::new(100);
        q.set(AgentState::S0, 37, 0.3);
        let allowed = vec![true; 100];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in 1..50 {
            assert_eq!(select_action(&q, AgentState::S0, t, &cfg, &allowed, &mut rng), 37);
        }
    }

    #[test]
    fn greedy_after_horizon_even_with_full_exploration() {
        let cfg = AgentConfig {
            exploration: 1.0,
            ..AgentConfig::default()
        };
        let mut q = QTable::new(100);
        q.set(AgentState::S1, 5, 2.0);
        let allowed = vec![true; 100];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in 2001..2100 {
            assert_eq!(select_action(&q, AgentState::S1, t, &cfg, &allowed, &mut rng), 5);
        }
    }

    #[test]
    fn masked_actions_are_never_chosen() {
        let cfg = AgentConfig {
            exploration: 1.0,
            power_levels_dbm: vec![0.0, 10.0, 20.0],
            ..AgentConfig::default()
        };
        // 20 mW cap: two beams at 20 dBm (200 mW) or 20 + 10 dBm are out
        let mut agent = QAgent::new(0, vec![3], 2, cfg, 0.1);
        assert!(agent.masked_actions() > 0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for t in 1..500 {
            let d = agent.scheduling_step(None, t, &mut rng);
            let total: f64 = d.beam_powers_dbm.iter().map(|&p| units::dbm_to_watts(p)).sum();
            assert!(total <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn scheduling_is_deterministic_when_greedy() {
        let cfg = AgentConfig {
            exploration: 0.0,
            ..AgentConfig::default()
        };
        let mut agent = QAgent::new(0, vec![1, 4], 2, cfg, 0.63);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        agent.q.set(AgentState::S1, 17, 1.0);
        let a = agent.scheduling_step(None, 3000, &mut rng);
        let b = agent.scheduling_step(None, 3001, &mut rng);
        assert_eq!(a.action, b.action);
        assert_eq!(a.action, 17);
        assert_eq!(a.proposals, vec![false, false]);
        assert_eq!(a.beam_powers_dbm, vec![6.0, 4.0]);
    }

    #[test]
    fn emitted_powers_come_from_the_level_set() {
        let mut agent = QAgent::new(1, vec![0, 2], 2, AgentConfig::default(), 0.631);
        assert_eq!(agent.q.len(), 200);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for t in 1..=3000 {
            let d = agent.scheduling_step(Some(if t % 3 == 0 { 25.0 } else { 5.0 }), t, &mut rng);
            for p in d.beam_powers_dbm {
                assert!([0.0, 2.0, 4.0, 6.0, 8.0].contains(&p));
            }
        }
    }

    #[test]
    fn no_intersection_users_leaves_power_only_space() {
        let agent = QAgent::new(0, vec![], 2, AgentConfig::default(), 0.631);
        assert_eq!(agent.space.size(), 25);
    }

    #[test]
    fn ue_association_rules() {
        let prio = UePriorityList::from_estimates(&[10.0, 30.0]);
        assert_eq!(prio.order, vec![1, 0]);
        assert_eq!(ue_associate(&prio, &[Some(true), Some(true)]), 1);
        assert_eq!(ue_associate(&prio, &[Some(true), Some(false)]), 0);
        assert_eq!(ue_associate(&prio, &[Some(false), Some(false)]), 1);
        assert_eq!(ue_associate(&prio, &[Some(true), None]), 0);
        let tied = UePriorityList::from_estimates(&[5.0, 5.0]);
        assert_eq!(tied.head(), 0);
    }

    proptest! {
        #[test]
        fn q_values_stay_within_geometric_bound(seed in any::<u64>(), alpha in 0.01f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut q = QTable::new(10);
            for _ in 0..2000 {
                let s = if rng.random::<bool>() { AgentState::S0 } else { AgentState::S1 };
                let s2 = if rng.random::<bool>() { AgentState::S0 } else { AgentState::S1 };
                let r = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let a = rng.random_range(0..10);
                let before = q.clone();
                q_update(&mut q, s, a, r, s2, alpha, 0.9);
                let changed = q.values().iter().zip(before.values()).filter(|(x, y)| x != y).count();
                prop_assert!(changed <= 1);
                prop_assert!(q.max_abs() <= 10.0 + 1e-9);
            }
        }
    }
}
