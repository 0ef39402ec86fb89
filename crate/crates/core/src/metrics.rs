//! Capacity, capacity-tradeoff curves and improvement statistics.
//!
//! Every capacity in this module is a sum of per-block rates
//! `block_bandwidth * log2(1 + snr)` taken in ascending block order, so the
//! same ownership always produces bit-identical totals whichever routine
//! computed it.

use crate::alloc::{rank_by_ratio, spectral_efficiency, Allocation};
use crate::channel::{BlockResponse, LinkBudget};
use crate::{seed, Error, Result, UserId};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::{self, Write};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityReport {
    /// bit/s per user.
    pub per_user: BTreeMap<UserId, f64>,
    /// bit/s.
    pub total: f64,
}

/// Left-to-right sum starting from +0.
pub(crate) fn ordered_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, |acc, x| acc + x)
}

/// Achievable rate of every block for `block`'s user, in bit/s.
pub fn block_rates(block: &BlockResponse, link: &LinkBudget) -> Result<Vec<f64>> {
    let eta = spectral_efficiency(block.user_id(), &link.snr(block)?)?;
    Ok(rates_from_efficiency(&eta.eta, block.grid().block_bandwidth()))
}

pub(crate) fn rates_from_efficiency(eta: &[f64], block_bandwidth: f64) -> Vec<f64> {
    eta.iter().map(|e| block_bandwidth * e).collect()
}

/// Sum of `rates` over blocks where `owned` holds.
pub(crate) fn owned_sum(rates: &[f64], owned: impl Fn(usize) -> bool) -> f64 {
    ordered_sum(rates.iter().enumerate().filter(|(i, _)| owned(*i)).map(|(_, r)| *r))
}

/// Per-user Shannon capacity of an allocation.
pub fn capacity(alloc: &Allocation, blocks: &[BlockResponse], link: &LinkBudget) -> Result<CapacityReport> {
    let mut per_user = BTreeMap::new();
    for b in blocks {
        if b.block_count() != alloc.block_count() {
            return Err(Error::DimensionMismatch {
                what: "allocation vs block response",
                expected: b.block_count(),
                actual: alloc.block_count(),
            });
        }
        let rates = block_rates(b, link)?;
        let user = b.user_id();
        per_user.insert(user, owned_sum(&rates, |i| alloc.owner[i] == user));
    }
    if let Some(stray) = alloc.owner.iter().find(|u| !per_user.contains_key(u)) {
        return Err(Error::UnknownUser(*stray));
    }
    let total = ordered_sum(per_user.values().copied());
    Ok(CapacityReport { per_user, total })
}

/// Allocation giving the first `k` blocks of `order` to `user1`, the rest to `user2`.
pub fn split_allocation(order: &[usize], k: usize, user1: UserId, user2: UserId) -> Allocation {
    let mut owner = vec![user2; order.len()];
    for &b in &order[..k] {
        owner[b] = user1;
    }
    Allocation::new(owner)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveStrategy {
    Ca,
    AntiCa,
    RandomMean,
}

impl CurveStrategy {
    pub fn label(&self) -> &'static str {
        match self {
            CurveStrategy::Ca => "ca",
            CurveStrategy::AntiCa => "anti_ca",
            CurveStrategy::RandomMean => "random_mean",
        }
    }
}

/// How user 1's `k` blocks are chosen along a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Top `k` of the channel-response ranking.
    Ca,
    /// Bottom `k` of the channel-response ranking.
    AntiCa,
    /// Mean over `trials` uniform `k`-subsets.
    Random { seed: u64, trials: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub k: usize,
    pub c1: f64,
    pub c2: f64,
}

/// Per-`k` extremes over random trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub c1_min: f64,
    pub c1_max: f64,
    pub c2_min: f64,
    pub c2_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffCurve {
    pub strategy: CurveStrategy,
    pub points: Vec<CurvePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope: Option<Vec<Envelope>>,
}

/// Capacity pairs for `k = 0 ..= N` when user 1 takes the prefix of `order`.
fn curve_along(order: &[usize], rates1: &[f64], rates2: &[f64]) -> Vec<CurvePoint> {
    let n = order.len();
    let mut mine = vec![false; n];
    (0..=n)
        .map(|k| {
            if k > 0 {
                mine[order[k - 1]] = true;
            }
            CurvePoint {
                k,
                c1: owned_sum(rates1, |i| mine[i]),
                c2: owned_sum(rates2, |i| !mine[i]),
            }
        })
        .collect()
}

/// Capacity tradeoff between two users as user 1's share grows block by block.
pub fn tradeoff_curve(
    block1: &BlockResponse,
    block2: &BlockResponse,
    link: &LinkBudget,
    strategy: Strategy,
) -> Result<TradeoffCurve> {
    if block1.grid() != block2.grid() {
        return Err(Error::GridMismatch {
            a: block1.user_id(),
            b: block2.user_id(),
        });
    }
    let rates1 = block_rates(block1, link)?;
    let rates2 = block_rates(block2, link)?;

    match strategy {
        Strategy::Ca | Strategy::AntiCa => {
            let mut order = rank_by_ratio(block1.magnitudes(), block2.magnitudes())?.order;
            let label = if strategy == Strategy::AntiCa {
                order.reverse();
                CurveStrategy::AntiCa
            } else {
                CurveStrategy::Ca
            };
            Ok(TradeoffCurve {
                strategy: label,
                points: curve_along(&order, &rates1, &rates2),
                envelope: None,
            })
        }
        Strategy::Random { seed: root, trials } => {
            if trials == 0 {
                return Err(Error::InvalidArgument("random curve needs at least one trial".into()));
            }
            let n = rates1.len();
            let mut sum = vec![(0.0, 0.0); n + 1];
            let mut env = vec![
                Envelope {
                    c1_min: f64::INFINITY,
                    c1_max: f64::NEG_INFINITY,
                    c2_min: f64::INFINITY,
                    c2_max: f64::NEG_INFINITY,
                };
                n + 1
            ];
            for t in 0..trials {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed::derive(root, t as u64)));
                for p in curve_along(&order, &rates1, &rates2) {
                    let (s, e) = (&mut sum[p.k], &mut env[p.k]);
                    s.0 += p.c1;
                    s.1 += p.c2;
                    e.c1_min = e.c1_min.min(p.c1);
                    e.c1_max = e.c1_max.max(p.c1);
                    e.c2_min = e.c2_min.min(p.c2);
                    e.c2_max = e.c2_max.max(p.c2);
                }
            }
            let scale = trials as f64;
            let points = sum
                .iter()
                .enumerate()
                .map(|(k, (s1, s2))| CurvePoint {
                    k,
                    c1: s1 / scale,
                    c2: s2 / scale,
                })
                .collect();
            Ok(TradeoffCurve {
                strategy: CurveStrategy::RandomMean,
                points,
                envelope: Some(env),
            })
        }
    }
}

/// Where a curve crosses `c1 = c2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EqualCapacityPoint {
    /// Common per-user capacity at the crossing, bit/s.
    pub throughput: f64,
    /// Interpolated split index.
    pub k: f64,
}

/// First crossing of `c1 - c2` through zero, linearly interpolated between
/// the bracketing integer splits.
pub fn equal_capacity_point(curve: &TradeoffCurve) -> Result<EqualCapacityPoint> {
    let pts = &curve.points;
    let first = pts
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty tradeoff curve".into()))?;
    let diff = |p: &CurvePoint| p.c1 - p.c2;
    if diff(first) >= 0.0 {
        return Ok(EqualCapacityPoint {
            throughput: first.c1,
            k: first.k as f64,
        });
    }
    for w in pts.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        let (dl, dh) = (diff(lo), diff(hi));
        if dh == 0.0 {
            return Ok(EqualCapacityPoint {
                throughput: hi.c1,
                k: hi.k as f64,
            });
        }
        if dl < 0.0 && dh > 0.0 {
            let t = dl / (dl - dh);
            return Ok(EqualCapacityPoint {
                throughput: lo.c1 + t * (hi.c1 - lo.c1),
                k: lo.k as f64 + t * (hi.k - lo.k) as f64,
            });
        }
    }
    Err(Error::InvalidArgument(
        "tradeoff curve never reaches equal capacity".into(),
    ))
}

/// Percentage gain of `curve`'s equal-capacity throughput over `baseline`'s.
pub fn improvement(curve: &TradeoffCurve, baseline: &TradeoffCurve) -> Result<f64> {
    if curve.points.len() != baseline.points.len() {
        return Err(Error::DimensionMismatch {
            what: "curve lengths",
            expected: curve.points.len(),
            actual: baseline.points.len(),
        });
    }
    let t = equal_capacity_point(curve)?.throughput;
    let base = equal_capacity_point(baseline)?.throughput;
    Ok(improvement_from_throughput(t, base))
}

pub fn improvement_from_throughput(throughput: f64, baseline: f64) -> f64 {
    100.0 * (throughput - baseline) / baseline
}

/// Order statistics of an ensemble of values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    Some(Summary {
        count: n,
        mean: ordered_sum(v.iter().copied()) / n as f64,
        median,
        min: v[0],
        max: v[n - 1],
    })
}

/// Rows `strategy,k,c1_bps,c2_bps` for each curve in turn.
pub fn write_curves_csv<W: Write>(mut out: W, curves: &[TradeoffCurve], comment: Option<&str>) -> io::Result<()> {
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "strategy,k,c1_bps,c2_bps")?;
    for curve in curves {
        for p in &curve.points {
            writeln!(out, "{},{},{},{}", curve.strategy.label(), p.k, p.c1, p.c2)?;
        }
    }
    out.flush()
}
