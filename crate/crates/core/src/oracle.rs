//! Reference allocators for a fixed split of `k` blocks to user 1.
//!
//! For fixed `k` the two-user sum capacity is
//! `sum(rate2) + sum_{S}(rate1 - rate2)`, so the optimum takes the `k` blocks
//! with the largest efficiency difference. [`difference_greedy`] does exactly
//! that; [`exhaustive_best_sum`] enumerates every subset to confirm it on
//! small instances. [`random_allocation`] is the unranked baseline.

use crate::alloc::{Allocation, SpectralEfficiencyVector};
use crate::metrics::{owned_sum, rates_from_efficiency};
use crate::{Error, Result, UserId};
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Largest block count [`exhaustive_best_sum`] will enumerate.
pub const ENUMERATION_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    Exhaustive,
    DifferenceGreedy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub allocation: Allocation,
    /// Sum capacity in bit/s, identical to `capacity(..).total` on `allocation`.
    pub objective: f64,
    pub method: OracleMethod,
    /// Subsets scored.
    pub evaluations: u64,
}

fn check_pair(eta1: &SpectralEfficiencyVector, eta2: &SpectralEfficiencyVector, k: usize) -> Result<usize> {
    let n = eta1.eta.len();
    if eta2.eta.len() != n {
        return Err(Error::DimensionMismatch {
            what: "efficiency vectors",
            expected: n,
            actual: eta2.eta.len(),
        });
    }
    if eta1.user_id == eta2.user_id {
        return Err(Error::InvalidArgument(format!(
            "both efficiency vectors belong to user {}",
            eta1.user_id
        )));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds {n} blocks")));
    }
    Ok(n)
}

/// Bandwidth-weighted two-user sum capacity of `alloc`.
pub fn sum_objective(
    alloc: &Allocation,
    eta1: &SpectralEfficiencyVector,
    eta2: &SpectralEfficiencyVector,
    block_bandwidth: f64,
) -> f64 {
    let r1 = rates_from_efficiency(&eta1.eta, block_bandwidth);
    let r2 = rates_from_efficiency(&eta2.eta, block_bandwidth);
    let (u1, u2) = (eta1.user_id, eta2.user_id);
    owned_sum(&r1, |i| alloc.owner[i] == u1) + owned_sum(&r2, |i| alloc.owner[i] == u2)
}

fn owners_for(n: usize, chosen: &[usize], u1: UserId, u2: UserId) -> Allocation {
    let mut owner = vec![u2; n];
    for &b in chosen {
        owner[b] = u1;
    }
    Allocation::new(owner)
}

/// Best `k`-subset for user 1 by full enumeration, lexicographically smallest
/// on ties. Refuses more than [`ENUMERATION_LIMIT`] blocks.
pub fn exhaustive_best_sum(
    eta1: &SpectralEfficiencyVector,
    eta2: &SpectralEfficiencyVector,
    k: usize,
    block_bandwidth: f64,
) -> Result<OracleResult> {
    let n = eta1.eta.len();
    if n > ENUMERATION_LIMIT {
        return Err(Error::GuardRefused {
            blocks: n,
            limit: ENUMERATION_LIMIT,
        });
    }
    check_pair(eta1, eta2, k)?;
    let r1 = rates_from_efficiency(&eta1.eta, block_bandwidth);
    let r2 = rates_from_efficiency(&eta2.eta, block_bandwidth);

    let mut combo: Vec<usize> = (0..k).collect();
    let mut mine = vec![false; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut evaluations = 0u64;

    loop {
        mine.iter_mut().for_each(|m| *m = false);
        for &b in &combo {
            mine[b] = true;
        }
        let objective = owned_sum(&r1, |i| mine[i]) + owned_sum(&r2, |i| !mine[i]);
        evaluations += 1;
        if best.as_ref().is_none_or(|(b, _)| objective > *b) {
            best = Some((objective, combo.clone()));
        }

        // Next combination in lexicographic order.
        let Some(pos) = (0..k).rev().find(|&i| combo[i] < n - k + i) else {
            break;
        };
        combo[pos] += 1;
        for i in pos + 1..k {
            combo[i] = combo[i - 1] + 1;
        }
    }

    let (objective, chosen) = best.expect("at least one subset is scored");
    Ok(OracleResult {
        allocation: owners_for(n, &chosen, eta1.user_id, eta2.user_id),
        objective,
        method: OracleMethod::Exhaustive,
        evaluations,
    })
}

/// Exact fixed-`k` optimum: the `k` blocks with the largest `eta1 - eta2`,
/// ties to the lower block index.
pub fn difference_greedy(
    eta1: &SpectralEfficiencyVector,
    eta2: &SpectralEfficiencyVector,
    k: usize,
    block_bandwidth: f64,
) -> Result<OracleResult> {
    let n = check_pair(eta1, eta2, k)?;
    let diff: Vec<f64> = eta1.eta.iter().zip(&eta2.eta).map(|(a, b)| a - b).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diff[j].total_cmp(&diff[i]).then(i.cmp(&j)));

    let allocation = owners_for(n, &order[..k], eta1.user_id, eta2.user_id);
    let objective = sum_objective(&allocation, eta1, eta2, block_bandwidth);
    Ok(OracleResult {
        allocation,
        objective,
        method: OracleMethod::DifferenceGreedy,
        evaluations: 1,
    })
}

/// Uniformly random `k`-subset of blocks to `user1`, the rest to `user2`.
pub fn random_allocation(block_count: usize, k: usize, seed: u64, user1: UserId, user2: UserId) -> Result<Allocation> {
    if k > block_count {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds {block_count} blocks"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = index::sample(&mut rng, block_count, k).into_vec();
    Ok(owners_for(block_count, &chosen, user1, user2))
}

/// Random ownership with fixed per-user block counts, for any number of users.
pub fn random_assignment(quotas: &[(UserId, usize)], seed: u64) -> Allocation {
    let mut owner: Vec<UserId> = quotas
        .iter()
        .flat_map(|&(u, c)| std::iter::repeat_n(u, c))
        .collect();
    owner.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Allocation::new(owner)
}

/// Ratio of an allocation's sum capacity to the oracle optimum for the same `k`.
pub fn optimality_gap(
    ca: &Allocation,
    oracle: &OracleResult,
    eta1: &SpectralEfficiencyVector,
    eta2: &SpectralEfficiencyVector,
    block_bandwidth: f64,
) -> Result<f64> {
    let u1 = eta1.user_id;
    let (kc, ko) = (ca.count_of(u1), oracle.allocation.count_of(u1));
    if kc != ko {
        return Err(Error::SplitMismatch { ca: kc, oracle: ko });
    }
    Ok(sum_objective(ca, eta1, eta2, block_bandwidth) / oracle.objective)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eta(u: u32, v: &[f64]) -> SpectralEfficiencyVector {
        SpectralEfficiencyVector {
            user_id: UserId(u),
            eta: v.to_vec(),
        }
    }

    fn binomial(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn obvious_optimum() {
        let (a, b) = (eta(1, &[2.0, 1.0]), eta(2, &[1.0, 2.0]));
        let r = exhaustive_best_sum(&a, &b, 1, 1.0).unwrap();
        assert_eq!(r.allocation.owner, vec![UserId(1), UserId(2)]);
        assert_eq!(r.objective, 4.0);
        assert_eq!(difference_greedy(&a, &b, 1, 1.0).unwrap().objective, 4.0);
    }

    #[test]
    fn k_zero_and_full() {
        let (a, b) = (eta(1, &[2.0, 1.0, 3.0]), eta(2, &[1.0, 2.0, 0.5]));
        let r = exhaustive_best_sum(&a, &b, 0, 1.0).unwrap();
        assert_eq!(r.allocation.owner, vec![UserId(2); 3]);
        assert_eq!(r.evaluations, 1);
        let g = difference_greedy(&a, &b, 3, 1.0).unwrap();
        assert_eq!(g.allocation.owner, vec![UserId(1); 3]);
    }

    #[test]
    fn worked_divergence_instance() {
        let (a, b) = (eta(1, &[0.2, 101.0]), eta(2, &[0.1, 100.0]));
        let g = difference_greedy(&a, &b, 1, 1.0).unwrap();
        assert_eq!(g.allocation.blocks_of(UserId(1)), vec![1]);
        assert!((g.objective - 101.1).abs() < 1e-12);
        let e = exhaustive_best_sum(&a, &b, 1, 1.0).unwrap();
        assert_eq!(e.allocation, g.allocation);

        // Ratio ranking prefers block 0 (2.0 > 1.01).
        let ca = owners_for(2, &[0], UserId(1), UserId(2));
        let gap = optimality_gap(&ca, &g, &a, &b, 1.0).unwrap();
        assert!((gap - 100.2 / 101.1).abs() < 1e-12);
        assert!((gap - 0.991).abs() < 5e-4);
    }

    #[test]
    fn equal_efficiencies_pick_lexicographic_first() {
        let (a, b) = (eta(1, &[1.0; 5]), eta(2, &[1.0; 5]));
        let g = difference_greedy(&a, &b, 2, 1.0).unwrap();
        assert_eq!(g.allocation.blocks_of(UserId(1)), vec![0, 1]);
        let e = exhaustive_best_sum(&a, &b, 2, 1.0).unwrap();
        assert_eq!(e.allocation, g.allocation);
    }

    #[test]
    fn enumeration_count_is_binomial() {
        let v: Vec<f64> = (0..9).map(|i| 1.0 + i as f64 * 0.37).collect();
        let w: Vec<f64> = (0..9).map(|i| 3.0 - i as f64 * 0.21).collect();
        let (a, b) = (eta(1, &v), eta(2, &w));
        for k in 0..=9 {
            let r = exhaustive_best_sum(&a, &b, k, 1.0).unwrap();
            assert_eq!(r.evaluations, binomial(9, k as u64));
        }
    }

    #[test]
    fn guard_refuses_large_instances() {
        let (a, b) = (eta(1, &[1.0; 21]), eta(2, &[1.0; 21]));
        assert!(matches!(
            exhaustive_best_sum(&a, &b, 3, 1.0),
            Err(Error::GuardRefused { blocks: 21, limit: 20 })
        ));
    }

    #[test]
    fn argument_errors() {
        let (a, b) = (eta(1, &[1.0; 3]), eta(2, &[1.0; 2]));
        assert!(difference_greedy(&a, &b, 1, 1.0).is_err());
        let b = eta(2, &[1.0; 3]);
        assert!(difference_greedy(&a, &b, 4, 1.0).is_err());
        assert!(difference_greedy(&a, &eta(1, &[1.0; 3]), 1, 1.0).is_err());
        assert!(random_allocation(3, 4, 0, UserId(1), UserId(2)).is_err());
    }

    #[test]
    fn gap_requires_same_split() {
        let (a, b) = (eta(1, &[1.0, 2.0]), eta(2, &[2.0, 1.0]));
        let g = difference_greedy(&a, &b, 1, 1.0).unwrap();
        let ca = owners_for(2, &[], UserId(1), UserId(2));
        assert!(matches!(
            optimality_gap(&ca, &g, &a, &b, 1.0),
            Err(Error::SplitMismatch { ca: 0, oracle: 1 })
        ));
        assert_eq!(optimality_gap(&g.allocation, &g, &a, &b, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn random_allocation_is_seeded() {
        let a = random_allocation(10, 4, 11, UserId(1), UserId(2)).unwrap();
        let b = random_allocation(10, 4, 11, UserId(1), UserId(2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.count_of(UserId(1)), 4);
        let z = random_allocation(10, 0, 11, UserId(1), UserId(2)).unwrap();
        assert_eq!(z.owner, vec![UserId(2); 10]);
    }

    #[test]
    fn random_allocation_is_uniform() {
        let mut hits = [0u32; 10];
        let seeds = 10_000;
        for s in 0..seeds {
            let a = random_allocation(10, 5, s, UserId(1), UserId(2)).unwrap();
            for b in a.blocks_of(UserId(1)) {
                hits[b] += 1;
            }
        }
        // Binomial(10^4, 0.5): sd = 50, so +-200 is 4 sd.
        for h in hits {
            let f = h as f64 / seeds as f64;
            assert!((f - 0.5).abs() <= 0.02, "frequency {f}");
        }
    }

    #[test]
    fn random_assignment_keeps_quotas() {
        let a = random_assignment(&[(UserId(1), 3), (UserId(2), 5), (UserId(3), 0)], 4);
        assert_eq!(a.block_count(), 8);
        assert_eq!(a.count_of(UserId(1)), 3);
        assert_eq!(a.count_of(UserId(2)), 5);
    }
}
