//! Intra-beam NOMA: SIC decoding order and power-domain split.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Gains below this are treated as this value when splitting power.
pub const MIN_GAIN: f64 = 1e-12;

/// How decoding ranks map onto channel strength. The intra-beam interference
/// a user sees sums the factors of co-beam users with a *larger* rank, so
/// with `StrongestLast` the strongest user cancels everyone else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SicOrder {
    StrongestFirst,
    #[default]
    StrongestLast,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerPolicy {
    /// Fractional transmit power allocation, `β_u ∝ g_u^{-exponent}`.
    Ftpa { exponent: f64 },
    /// Each weaker user gets `ratio` times the share of the next stronger one.
    FixedSplit { ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PolicyKind {
    #[default]
    Ftpa,
    FixedSplit,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct NomaConfig {
    pub policy: PolicyKind,
    /// FTPA decay exponent ξ.
    pub exponent: f64,
    /// Fixed-split ratio between consecutive users.
    pub ratio: f64,
    pub sic_order: SicOrder,
}

impl Default for NomaConfig {
    fn default() -> Self {
        Self {
            policy: PolicyKind::Ftpa,
            exponent: 1.0,
            ratio: 4.0,
            sic_order: SicOrder::StrongestLast,
        }
    }
}

impl NomaConfig {
    pub fn power_policy(&self) -> PowerPolicy {
        match self.policy {
            PolicyKind::Ftpa => PowerPolicy::Ftpa {
                exponent: self.exponent,
            },
            PolicyKind::FixedSplit => PowerPolicy::FixedSplit { ratio: self.ratio },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exponent > 0.0) {
            return Err(Error::invalid("noma.exponent", "must be positive"));
        }
        if !(self.ratio >= 1.0) {
            return Err(Error::invalid("noma.ratio", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodingOrder {
    /// Rank per input position, forming a permutation of `1..=n`.
    pub ranks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFactors {
    pub beta: Vec<f64>,
    /// Some gain was at or below [`MIN_GAIN`].
    pub clamped: bool,
}

/// Input positions sorted strongest first; ties by user id.
fn strength_order(gains: &[f64], ids: &[usize]) -> Vec<usize> {
    debug_assert_eq!(gains.len(), ids.len());
    let mut idx: Vec<usize> = (0..gains.len()).collect();
    idx.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(ids[a].cmp(&ids[b])));
    idx
}

pub fn decoding_order(gains: &[f64], ids: &[usize], convention: SicOrder) -> DecodingOrder {
    let n = gains.len();
    let mut ranks = alloc::vec![0; n];
    for (pos, i) in strength_order(gains, ids).into_iter().enumerate() {
        ranks[i] = match convention {
            SicOrder::StrongestFirst => pos + 1,
            SicOrder::StrongestLast => n - pos,
        };
    }
    DecodingOrder { ranks }
}

pub fn intra_beam_power(gains: &[f64], ids: &[usize], policy: PowerPolicy) -> PowerFactors {
    let n = gains.len();
    if n == 0 {
        return PowerFactors {
            beta: Vec::new(),
            clamped: false,
        };
    }
    let clamped = gains.iter().any(|&g| !(g > MIN_GAIN));
    let weights: Vec<f64> = match policy {
        PowerPolicy::Ftpa { exponent } => gains
            .iter()
            .map(|&g| g.max(MIN_GAIN).powf(-exponent))
            .collect(),
        PowerPolicy::FixedSplit { ratio } => {
            let mut w = alloc::vec![0.0; n];
            for (pos, i) in strength_order(gains, ids).into_iter().enumerate() {
                w[i] = ratio.powi(pos as i32);
            }
            w
        }
    };
    let total: f64 = weights.iter().sum();
    PowerFactors {
        beta: weights.into_iter().map(|w| w / total).collect(),
        clamped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    const FTPA: PowerPolicy = PowerPolicy::Ftpa { exponent: 1.0 };

    #[test]
    fn ranks_follow_descending_gain() {
        let o = decoding_order(&[9.0, 4.0, 1.0], &[0, 1, 2], SicOrder::StrongestFirst);
        assert_eq!(o.ranks, vec![1, 2, 3]);
        let o = decoding_order(&[9.0, 4.0, 1.0], &[0, 1, 2], SicOrder::StrongestLast);
        assert_eq!(o.ranks, vec![3, 2, 1]);
    }

    #[test]
    fn equal_gains_order_by_id() {
        let o = decoding_order(&[2.0, 2.0, 2.0], &[7, 3, 5], SicOrder::StrongestFirst);
        assert_eq!(o.ranks, vec![3, 1, 2]);
    }

    #[test]
    fn single_user_beam() {
        assert_eq!(decoding_order(&[0.3], &[4], SicOrder::StrongestLast).ranks, vec![1]);
        assert_eq!(intra_beam_power(&[0.3], &[4], FTPA).beta, vec![1.0]);
    }

    #[test]
    fn ftpa_two_users() {
        let b = intra_beam_power(&[4.0, 1.0], &[0, 1], FTPA).beta;
        assert!((b[0] - 0.2).abs() < 1e-15);
        assert!((b[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn equal_gains_split_evenly() {
        let b = intra_beam_power(&[3.0; 5], &[0, 1, 2, 3, 4], FTPA).beta;
        for x in b {
            assert!((x - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_gain_is_clamped_and_gets_most_power() {
        let f = intra_beam_power(&[0.0, 1e-6], &[0, 1], FTPA);
        assert!(f.clamped);
        assert!(f.beta[0] > f.beta[1]);
        assert!((f.beta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_split_two_users() {
        let b = intra_beam_power(&[4.0, 1.0], &[0, 1], PowerPolicy::FixedSplit { ratio: 4.0 }).beta;
        assert!((b[0] - 0.2).abs() < 1e-15);
        assert!((b[1] - 0.8).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn ftpa_sums_to_one_and_is_monotone(
            gains in proptest::collection::vec(1e-14f64..1.0, 1..12),
            exponent in 0.1f64..3.0,
        ) {
            let ids: Vec<usize> = (0..gains.len()).collect();
            let b = intra_beam_power(&gains, &ids, PowerPolicy::Ftpa { exponent }).beta;
            prop_assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for i in 0..gains.len() {
                prop_assert!(b[i] > 0.0 && b[i] <= 1.0);
                for j in 0..gains.len() {
                    if gains[i] < gains[j] {
                        prop_assert!(b[i] >= b[j]);
                    }
                }
            }
        }

        #[test]
        fn order_is_a_scale_invariant_permutation(
            gains in proptest::collection::vec(1e-9f64..1.0, 1..12),
            scale in 1e-6f64..1e6,
            strongest_last in any::<bool>(),
        ) {
            let conv = if strongest_last { SicOrder::StrongestLast } else { SicOrder::StrongestFirst };
            let ids: Vec<usize> = (0..gains.len()).collect();
            let o = decoding_order(&gains, &ids, conv);
            let mut sorted = o.ranks.clone();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (1..=gains.len()).collect::<Vec<_>>());
            let scaled: Vec<f64> = gains.iter().map(|g| g * scale).collect();
            prop_assert_eq!(decoding_order(&scaled, &ids, conv), o);
        }
    }
}
