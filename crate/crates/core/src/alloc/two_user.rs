use super::{
    rank_by_ratio, select_by_threshold, spectral_efficiency, Allocation, RankingMode,
    RatioRanking, ThresholdConfig, ThresholdPartition,
};
use crate::channel::{BlockResponse, LinkBudget};
use crate::{Error, Result, UserId};
use serde::Serialize;

/// Requested block counts per user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Demand {
    pub user1: usize,
    pub user2: usize,
}

impl Demand {
    /// Even split of `blocks`, the odd block to user 1.
    pub fn balanced(blocks: usize) -> Self {
        Self::proportional(blocks, 1, 1)
    }

    /// Split of `blocks` proportional to `weight1 : weight2`, rounded half up
    /// in favour of side 1.
    pub fn proportional(blocks: usize, weight1: usize, weight2: usize) -> Self {
        let total = weight1 + weight2;
        let user1 = (2 * blocks * weight1 + total) / (2 * total);
        Self {
            user1: user1.min(blocks),
            user2: blocks - user1.min(blocks),
        }
    }

    /// Demand from fractions of `blocks`, each rounded to the nearest block.
    pub fn from_fractions(blocks: usize, frac1: f64, frac2: f64) -> Result<Self> {
        for f in [frac1, frac2] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidArgument(format!(
                    "demand fraction {f} outside [0, 1]"
                )));
            }
        }
        let user1 = (frac1 * blocks as f64).round() as usize;
        let user2 = (frac2 * blocks as f64).round() as usize;
        let d = Self { user1, user2 };
        d.check(blocks)?;
        Ok(d)
    }

    fn check(&self, blocks: usize) -> Result<()> {
        if self.user1 + self.user2 > blocks {
            return Err(Error::InvalidArgument(format!(
                "demand {} + {} exceeds {blocks} blocks",
                self.user1, self.user2
            )));
        }
        Ok(())
    }
}

/// Ranking, partition and finalized owners of a two-user run.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoUserAllocation {
    pub ranking: RatioRanking,
    pub partition: ThresholdPartition,
    pub allocation: Allocation,
}

/// Rank blocks for `block1` against `block2`.
///
/// `ChannelResponse` mode compares magnitudes directly. `EfficiencyRatio`
/// mode needs `link` to turn magnitudes into SNR first.
pub fn two_user_ranking(
    block1: &BlockResponse,
    block2: &BlockResponse,
    mode: RankingMode,
    link: Option<&LinkBudget>,
) -> Result<RatioRanking> {
    if block1.grid() != block2.grid() {
        return Err(Error::GridMismatch {
            a: block1.user_id(),
            b: block2.user_id(),
        });
    }
    match mode {
        RankingMode::ChannelResponse => rank_by_ratio(block1.magnitudes(), block2.magnitudes()),
        RankingMode::EfficiencyRatio => {
            let link = link.ok_or_else(|| {
                Error::InvalidArgument("efficiency-ratio ranking needs a link budget".into())
            })?;
            let eta1 = spectral_efficiency(block1.user_id(), &link.snr(block1)?)?;
            let eta2 = spectral_efficiency(block2.user_id(), &link.snr(block2)?)?;
            rank_by_ratio(&eta1.eta, &eta2.eta)
        }
    }
}

/// Full two-user pipeline: rank, partition, then finalize flexible blocks.
///
/// Threshold sets are never reassigned. Flexible blocks first cover each
/// user's demand beyond its threshold set (user 1 from the head of the
/// flexible run, user 2 from the tail); anything left balances the total
/// block counts, ties to user 1. Without `demand` the balanced split is used.
pub fn allocate_two_user(
    block1: &BlockResponse,
    block2: &BlockResponse,
    cfg: &ThresholdConfig,
    demand: Option<Demand>,
    link: Option<&LinkBudget>,
) -> Result<TwoUserAllocation> {
    let ranking = two_user_ranking(block1, block2, cfg.mode(), link)?;
    let blocks = ranking.len();
    let explicit = demand.is_some();
    let demand = demand.unwrap_or_else(|| Demand::balanced(blocks));
    demand.check(blocks)?;

    let partition = select_by_threshold(&ranking, cfg.threshold());
    let split = finalize_flexible(&partition, demand);

    let (u1, u2) = (block1.user_id(), block2.user_id());
    let mut allocation = Allocation::new(owners_from_split(blocks, &split, u1, u2));
    // The balanced default is a tie-break rule, not a request: no shortfall.
    if explicit {
        for (user, unmet) in [(u1, split.unmet1), (u2, split.unmet2)] {
            if unmet > 0 {
                allocation.unmet_demand.insert(user, unmet);
            }
        }
    }

    Ok(TwoUserAllocation {
        ranking,
        partition,
        allocation,
    })
}

pub(crate) struct FlexibleSplit {
    pub side1: Vec<usize>,
    pub side2: Vec<usize>,
    pub unmet1: usize,
    pub unmet2: usize,
}

pub(crate) fn finalize_flexible(partition: &ThresholdPartition, demand: Demand) -> FlexibleSplit {
    let flex = &partition.flexible_blocks;
    let f = flex.len();
    let (c1, c2) = (partition.m(), partition.n());

    let need1 = demand.user1.saturating_sub(c1);
    let need2 = demand.user2.saturating_sub(c2);
    let give1 = need1.min(f);
    let give2 = need2.min(f - give1);

    let left = f - give1 - give2;
    let (cur1, cur2) = (c1 + give1, c2 + give2);
    // Smallest x with cur1 + x >= cur2 + left - x, clamped to the leftover.
    let extra1 = (cur2 + left).saturating_sub(cur1).div_ceil(2).min(left);

    let take1 = give1 + extra1;
    let mut side1 = partition.user1_blocks.clone();
    side1.extend_from_slice(&flex[..take1]);
    let mut side2 = partition.user2_blocks.clone();
    side2.extend(flex[take1..].iter().rev());

    FlexibleSplit {
        side1,
        side2,
        unmet1: demand.user1.saturating_sub(c1 + give1),
        unmet2: demand.user2.saturating_sub(c2 + give2),
    }
}

pub(crate) fn owners_from_split(blocks: usize, split: &FlexibleSplit, u1: UserId, u2: UserId) -> Vec<UserId> {
    let mut owner = vec![u2; blocks];
    for &b in &split.side1 {
        owner[b] = u1;
    }
    owner
}
