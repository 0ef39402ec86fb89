//! Comparative-advantage allocation.
//!
//! Two users are compared block by block through the ratio of their
//! advantage indicators (spectral efficiency or channel magnitude). Blocks are
//! ranked by that ratio in descending order; the head of the ranking whose
//! ratio exceeds the threshold goes to user 1, the tail whose inverse ratio
//! exceeds it goes to user 2, and the middle stays flexible until a demand
//! rule finalizes it.

mod consistency;
mod multi_user;
mod two_user;

pub use consistency::{ranking_consistency, RankCorrelation};
pub use multi_user::{allocate_multi_user, cluster_users, ClusterStrategy, MultiUserAllocation};
pub use two_user::{allocate_two_user, two_user_ranking, Demand, TwoUserAllocation};

use crate::{Error, Result, UserId};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Which indicator feeds the advantage ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RankingMode {
    /// Ratio of spectral efficiencies at the operating SNR.
    EfficiencyRatio,
    /// Ratio of channel magnitudes; independent of power loading and noise.
    #[default]
    ChannelResponse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdConfig {
    threshold: f64,
    mode: RankingMode,
}

impl ThresholdConfig {
    pub fn new(threshold: f64, mode: RankingMode) -> Result<Self> {
        if !(threshold.is_finite() && threshold >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "threshold must be a finite value >= 1, got {threshold}"
            )));
        }
        Ok(Self { threshold, mode })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn mode(&self) -> RankingMode {
        self.mode
    }
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            threshold: 1.1,
            mode: RankingMode::ChannelResponse,
        }
    }
}

/// Logarithm base used for spectral efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogBase {
    Two,
    E,
}

/// Per-block spectral efficiency of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEfficiencyVector {
    pub user_id: UserId,
    pub eta: Vec<f64>,
}

/// Shannon efficiency `log2(1 + gamma)` in bit/s/Hz.
pub fn spectral_efficiency(user_id: UserId, gamma: &[f64]) -> Result<SpectralEfficiencyVector> {
    spectral_efficiency_in(user_id, gamma, LogBase::Two)
}

pub fn spectral_efficiency_in(
    user_id: UserId,
    gamma: &[f64],
    base: LogBase,
) -> Result<SpectralEfficiencyVector> {
    let eta = gamma
        .iter()
        .enumerate()
        .map(|(block, &g)| {
            if g.is_nan() || g < 0.0 {
                return Err(Error::NegativeSnr { block, value: g });
            }
            Ok(match base {
                LogBase::Two => g.ln_1p() * std::f64::consts::LOG2_E,
                LogBase::E => g.ln_1p(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(SpectralEfficiencyVector { user_id, eta })
}

/// Blocks ordered by descending advantage ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRanking {
    /// Block indices `i_1 .. i_N`.
    pub order: Vec<usize>,
    /// `a[i] / b[i]` aligned with `order`.
    pub ratios: Vec<f64>,
    /// `b[i] / a[i]` aligned with `order`, computed directly rather than
    /// inverted so swapping the users reproduces these values exactly.
    pub inverse_ratios: Vec<f64>,
}

impl RatioRanking {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Rank blocks by `a[i] / b[i]`, descending, ties by ascending block index.
pub fn rank_by_ratio(a: &[f64], b: &[f64]) -> Result<RatioRanking> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "ratio operands",
            expected: a.len(),
            actual: b.len(),
        });
    }
    let valid = |v: f64| v.is_finite() && v > 0.0;
    if let Some(block) = (0..a.len()).find(|&i| !valid(a[i]) || !valid(b[i])) {
        return Err(Error::DegenerateRatio { block });
    }

    let ratios: Vec<f64> = a.iter().zip(b).map(|(x, y)| x / y).collect();
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_unstable_by(|&i, &j| ratios[j].total_cmp(&ratios[i]).then(i.cmp(&j)));

    Ok(RatioRanking {
        ratios: order.iter().map(|&i| ratios[i]).collect(),
        inverse_ratios: order.iter().map(|&i| b[i] / a[i]).collect(),
        order,
    })
}

/// Three-way split of a ranking around the threshold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ThresholdPartition {
    /// Head of the ranking, best block for user 1 first.
    pub user1_blocks: Vec<usize>,
    /// Tail of the ranking, best block for user 2 first.
    pub user2_blocks: Vec<usize>,
    /// Middle of the ranking in ranking order.
    pub flexible_blocks: Vec<usize>,
}

impl ThresholdPartition {
    pub fn m(&self) -> usize {
        self.user1_blocks.len()
    }

    pub fn n(&self) -> usize {
        self.user2_blocks.len()
    }
}

/// Hard-assign the head whose ratio is strictly above `threshold` to user 1
/// and the tail whose inverse ratio is strictly above it to user 2.
pub fn select_by_threshold(ranking: &RatioRanking, threshold: f64) -> ThresholdPartition {
    let len = ranking.len();
    let m = ranking.ratios.iter().take_while(|&&r| r > threshold).count();
    let n = ranking.inverse_ratios[m..]
        .iter()
        .rev()
        .take_while(|&&r| r > threshold)
        .count();
    ThresholdPartition {
        user1_blocks: ranking.order[..m].to_vec(),
        user2_blocks: ranking.order[len - n..].iter().rev().copied().collect(),
        flexible_blocks: ranking.order[m..len - n].to_vec(),
    }
}

/// Final owner of every block plus any demand that could not be met.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Allocation {
    pub owner: Vec<UserId>,
    pub unmet_demand: BTreeMap<UserId, usize>,
}

impl Allocation {
    pub fn new(owner: Vec<UserId>) -> Self {
        Self {
            owner,
            unmet_demand: BTreeMap::new(),
        }
    }

    /// Blocks owned by `user`, ascending.
    pub fn blocks_of(&self, user: UserId) -> Vec<usize> {
        self.owner
            .iter()
            .enumerate()
            .filter(|(_, u)| **u == user)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn count_of(&self, user: UserId) -> usize {
        self.owner.iter().filter(|u| **u == user).count()
    }

    pub fn block_count(&self) -> usize {
        self.owner.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn efficiency_examples() {
        let e = spectral_efficiency(UserId(0), &[0.0, 1.0, 3.0]).unwrap();
        assert_eq!(e.eta, vec![0.0, 1.0, 2.0]);
        assert!(matches!(
            spectral_efficiency(UserId(0), &[1.0, -0.5]),
            Err(Error::NegativeSnr { block: 1, .. })
        ));
        let n = spectral_efficiency_in(UserId(0), &[1.0], LogBase::E).unwrap();
        assert_eq!(n.eta[0], std::f64::consts::LN_2);
    }

    #[test]
    fn ranking_examples() {
        let r = rank_by_ratio(&[2.0, 1.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.order, vec![0, 1]);
        assert_eq!(r.ratios, vec![2.0, 0.5]);

        let r = rank_by_ratio(&[0.7, 1.3, 2.0, 5.0], &[0.7, 1.3, 2.0, 5.0]).unwrap();
        assert_eq!(r.order, vec![0, 1, 2, 3]);
        assert!(r.ratios.iter().all(|&x| x == 1.0));

        let r = rank_by_ratio(&[3.0, 1.0, 2.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.order, vec![0, 2, 1]);
        assert_eq!(r.ratios, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn ranking_errors() {
        assert!(matches!(
            rank_by_ratio(&[1.0, 1.0], &[1.0, 0.0]),
            Err(Error::DegenerateRatio { block: 1 })
        ));
        assert!(matches!(
            rank_by_ratio(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(rank_by_ratio(&[f64::NAN], &[1.0]).is_err());
    }

    fn ranking_from_ratios(ratios: &[f64]) -> RatioRanking {
        let ones = vec![1.0; ratios.len()];
        rank_by_ratio(ratios, &ones).unwrap()
    }

    #[test]
    fn threshold_examples() {
        let r = ranking_from_ratios(&[2.0, 1.5, 1.0, 0.5]);
        let p = select_by_threshold(&r, 1.1);
        assert_eq!(p.user1_blocks, vec![0, 1]);
        assert_eq!(p.user2_blocks, vec![3]);
        assert_eq!(p.flexible_blocks, vec![2]);

        let r = ranking_from_ratios(&[1.0; 5]);
        let p = select_by_threshold(&r, 1.0);
        assert_eq!((p.m(), p.n()), (0, 0));
        assert_eq!(p.flexible_blocks.len(), 5);
    }

    #[test]
    fn ratio_equal_to_threshold_is_flexible() {
        let r = rank_by_ratio(&[2.0, 1.0, 1.0], &[1.0, 1.0, 2.0]).unwrap();
        let p = select_by_threshold(&r, 2.0);
        assert_eq!((p.m(), p.n()), (0, 0));
    }

    #[test]
    fn user2_blocks_listed_best_first() {
        let r = ranking_from_ratios(&[0.2, 0.5, 0.25, 1.0]);
        let p = select_by_threshold(&r, 1.1);
        assert_eq!(p.user2_blocks, vec![0, 2, 1]);
        assert_eq!(p.flexible_blocks, vec![3]);
    }

    #[test]
    fn threshold_config_validation() {
        assert!(ThresholdConfig::new(0.9, RankingMode::ChannelResponse).is_err());
        assert!(ThresholdConfig::new(f64::NAN, RankingMode::ChannelResponse).is_err());
        assert_eq!(ThresholdConfig::default().threshold(), 1.1);
    }
}
