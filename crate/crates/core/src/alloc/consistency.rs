use super::SpectralEfficiencyVector;
use crate::channel::BlockResponse;
use crate::{Error, Result};
use serde::Serialize;

/// Kendall tau-b between two block orderings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankCorrelation {
    pub tau: f64,
    /// Set when either ordering is entirely tied; `tau` is then 0.
    pub all_ties: bool,
}

/// How faithfully the magnitude-ratio ranking reproduces the
/// efficiency-ratio ranking at the operating SNR.
pub fn ranking_consistency(
    eta1: &SpectralEfficiencyVector,
    eta2: &SpectralEfficiencyVector,
    block1: &BlockResponse,
    block2: &BlockResponse,
) -> Result<RankCorrelation> {
    let n = eta1.eta.len();
    for (what, len) in [
        ("eta2 length", eta2.eta.len()),
        ("block1 length", block1.block_count()),
        ("block2 length", block2.block_count()),
    ] {
        if len != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                actual: len,
            });
        }
    }
    let mut eta_ratio = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (eta1.eta[i], eta2.eta[i]);
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::DegenerateRatio { block: i });
        }
        eta_ratio.push(a / b);
    }
    let h_ratio: Vec<f64> = block1
        .magnitudes()
        .iter()
        .zip(block2.magnitudes())
        .map(|(a, b)| a / b)
        .collect();
    Ok(kendall_tau_b(&eta_ratio, &h_ratio))
}

/// Knight's O(n log n) tau-b.
pub(crate) fn kendall_tau_b(x: &[f64], y: &[f64]) -> RankCorrelation {
    let n = x.len();
    let undefined = RankCorrelation {
        tau: 0.0,
        all_ties: true,
    };
    if n < 2 {
        return undefined;
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]).then(y[i].total_cmp(&y[j])));

    let pairs = |t: u64| t * (t.saturating_sub(1)) / 2;
    let total = pairs(n as u64);

    // Ties in x, and joint ties in (x, y), over the sorted run.
    let (mut x_ties, mut joint_ties) = (0u64, 0u64);
    let (mut run_x, mut run_xy) = (1u64, 1u64);
    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        if x[a] == x[b] {
            run_x += 1;
            if y[a] == y[b] {
                run_xy += 1;
            } else {
                joint_ties += pairs(run_xy);
                run_xy = 1;
            }
        } else {
            x_ties += pairs(run_x);
            joint_ties += pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    x_ties += pairs(run_x);
    joint_ties += pairs(run_xy);

    // Sorting by y now counts the swaps, i.e. the discordant pairs.
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);

    let mut y_ties = 0u64;
    let mut run_y = 1u64;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run_y += 1;
        } else {
            y_ties += pairs(run_y);
            run_y = 1;
        }
    }
    y_ties += pairs(run_y);

    let denom_x = total - x_ties;
    let denom_y = total - y_ties;
    if denom_x == 0 || denom_y == 0 {
        return undefined;
    }
    let numer = total as f64 - x_ties as f64 - y_ties as f64 + joint_ties as f64 - 2.0 * swaps as f64;
    RankCorrelation {
        tau: (numer / (denom_x as f64 * denom_y as f64).sqrt()).clamp(-1.0, 1.0),
        all_ties: false,
    }
}

/// Stable merge sort of `v`, returning the number of inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (left, right) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(left, bl) + merge_count(right, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}
