use super::two_user::{finalize_flexible, Demand};
use super::{rank_by_ratio, select_by_threshold, Allocation, RankingMode, RatioRanking, ThresholdConfig, ThresholdPartition};
use crate::channel::BlockResponse;
use crate::{seed, Error, Result, UserId};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClusterStrategy {
    /// Seeded shuffle split at the midpoint, larger half first.
    Random,
    /// Anchor on the two users furthest apart in log-magnitude, assign the
    /// rest to the nearer anchor.
    #[default]
    ResponseBased,
}

/// Split users into two non-empty groups of indices into `responses`.
pub fn cluster_users(
    responses: &[BlockResponse],
    strategy: ClusterStrategy,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if responses.len() < 2 {
        return Err(Error::TooFewUsers {
            required: 2,
            actual: responses.len(),
        });
    }
    let logs: Vec<Vec<f64>> = responses
        .iter()
        .map(|r| r.magnitudes().iter().map(|m| m.ln()).collect())
        .collect();
    Ok(split_groups(&logs, strategy, seed))
}

/// `logs[u]` is member `u`'s log-magnitude vector; returns local indices.
fn split_groups(logs: &[Vec<f64>], strategy: ClusterStrategy, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let count = logs.len();
    debug_assert!(count >= 2);
    match strategy {
        ClusterStrategy::Random => {
            let mut idx: Vec<usize> = (0..count).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut g1 = idx[..count.div_ceil(2)].to_vec();
            let mut g2 = idx[count.div_ceil(2)..].to_vec();
            g1.sort_unstable();
            g2.sort_unstable();
            // Equal halves: the half holding the lowest index leads.
            if g1.len() == g2.len() && g2[0] < g1[0] {
                std::mem::swap(&mut g1, &mut g2);
            }
            (g1, g2)
        }
        ClusterStrategy::ResponseBased => {
            let dist2 = |a: &[f64], b: &[f64]| -> f64 {
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
            };
            let mut anchors = (0, 1);
            let mut best = dist2(&logs[0], &logs[1]);
            for i in 0..count {
                for j in i + 1..count {
                    let d = dist2(&logs[i], &logs[j]);
                    if d > best {
                        best = d;
                        anchors = (i, j);
                    }
                }
            }
            let (a1, a2) = anchors;
            let (mut g1, mut g2) = (Vec::new(), Vec::new());
            for u in 0..count {
                if u == a1 {
                    g1.push(u);
                } else if u == a2 {
                    g2.push(u);
                } else if dist2(&logs[u], &logs[a1]) <= dist2(&logs[u], &logs[a2]) {
                    g1.push(u);
                } else {
                    g2.push(u);
                }
            }
            (g1, g2)
        }
    }
}

/// The first (top-level) group comparison of a multi-user run.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSplit {
    pub group1: Vec<UserId>,
    pub group2: Vec<UserId>,
    pub ranking: RatioRanking,
    pub partition: ThresholdPartition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiUserAllocation {
    pub allocation: Allocation,
    /// `None` for a single user.
    pub top_level: Option<GroupSplit>,
}

struct Ctx<'a> {
    responses: &'a [BlockResponse],
    logs: Vec<Vec<f64>>,
    threshold: f64,
    strategy: ClusterStrategy,
    owner: Vec<Option<UserId>>,
    top_level: Option<GroupSplit>,
}

/// Recursive comparative-advantage allocation for any number of users.
///
/// Users are clustered into two groups whose per-block geometric-mean
/// magnitudes are ranked and thresholded like two single users. Flexible
/// blocks are finalized in proportion to group sizes, then each group
/// repeats the procedure on the blocks it received until groups are single
/// users. Only channel-response ranking is supported.
pub fn allocate_multi_user(
    responses: &[BlockResponse],
    cfg: &ThresholdConfig,
    strategy: ClusterStrategy,
    seed: u64,
) -> Result<MultiUserAllocation> {
    let first = responses.first().ok_or(Error::TooFewUsers {
        required: 1,
        actual: 0,
    })?;
    if cfg.mode() != RankingMode::ChannelResponse {
        return Err(Error::InvalidArgument(
            "multi-user allocation ranks channel responses only".into(),
        ));
    }
    for r in &responses[1..] {
        if r.grid() != first.grid() {
            return Err(Error::GridMismatch {
                a: first.user_id(),
                b: r.user_id(),
            });
        }
    }
    for (i, r) in responses.iter().enumerate() {
        if responses[..i].iter().any(|q| q.user_id() == r.user_id()) {
            return Err(Error::InvalidArgument(format!("duplicate user id {}", r.user_id())));
        }
    }

    let blocks = first.block_count();
    let mut ctx = Ctx {
        responses,
        logs: if responses.len() > 2 {
            responses
                .iter()
                .map(|r| r.magnitudes().iter().map(|m| m.ln()).collect())
                .collect()
        } else {
            Vec::new()
        },
        threshold: cfg.threshold(),
        strategy,
        owner: vec![None; blocks],
        top_level: None,
    };
    let members: Vec<usize> = (0..responses.len()).collect();
    let all: Vec<usize> = (0..blocks).collect();
    assign(&mut ctx, &members, &all, seed, true)?;

    let owner = ctx
        .owner
        .into_iter()
        .enumerate()
        .map(|(b, o)| o.ok_or_else(|| Error::InvalidArgument(format!("block {b} left unowned"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiUserAllocation {
        allocation: Allocation::new(owner),
        top_level: ctx.top_level,
    })
}

fn assign(ctx: &mut Ctx<'_>, members: &[usize], blocks: &[usize], node_seed: u64, top: bool) -> Result<()> {
    if members.len() == 1 {
        let user = ctx.responses[members[0]].user_id();
        for &b in blocks {
            ctx.owner[b] = Some(user);
        }
        return Ok(());
    }
    if blocks.is_empty() {
        return Ok(());
    }

    let (local1, local2) = if members.len() == 2 {
        (vec![0], vec![1])
    } else {
        let logs: Vec<Vec<f64>> = members
            .iter()
            .map(|&u| blocks.iter().map(|&b| ctx.logs[u][b]).collect())
            .collect();
        split_groups(&logs, ctx.strategy, node_seed)
    };
    let g1: Vec<usize> = local1.iter().map(|&i| members[i]).collect();
    let g2: Vec<usize> = local2.iter().map(|&i| members[i]).collect();

    let a = group_response(ctx, &g1, blocks);
    let b = group_response(ctx, &g2, blocks);
    let ranking = rank_by_ratio(&a, &b)?;
    let partition = select_by_threshold(&ranking, ctx.threshold);
    let split = finalize_flexible(
        &partition,
        Demand::proportional(blocks.len(), g1.len(), g2.len()),
    );

    let to_global = |local: &[usize]| -> Vec<usize> {
        let mut v: Vec<usize> = local.iter().map(|&p| blocks[p]).collect();
        v.sort_unstable();
        v
    };
    let blocks1 = to_global(&split.side1);
    let blocks2 = to_global(&split.side2);

    if top {
        ctx.top_level = Some(GroupSplit {
            group1: g1.iter().map(|&u| ctx.responses[u].user_id()).collect(),
            group2: g2.iter().map(|&u| ctx.responses[u].user_id()).collect(),
            ranking,
            partition,
        });
    }

    assign(ctx, &g1, &blocks1, seed::derive(node_seed, 1), false)?;
    assign(ctx, &g2, &blocks2, seed::derive(node_seed, 2), false)
}

/// Per-block geometric mean of member magnitudes on `blocks`.
fn group_response(ctx: &Ctx<'_>, group: &[usize], blocks: &[usize]) -> Vec<f64> {
    if let [single] = group {
        let m = ctx.responses[*single].magnitudes();
        return blocks.iter().map(|&b| m[b]).collect();
    }
    let scale = 1.0 / group.len() as f64;
    blocks
        .iter()
        .map(|&b| (group.iter().map(|&u| ctx.logs[u][b]).sum::<f64>() * scale).exp())
        .collect()
}
