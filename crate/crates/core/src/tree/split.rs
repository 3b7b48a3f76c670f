use crate::rescale::ScoredMatrix;

use super::{stats_of, SplitRule};

/// Gains within this relative distance count as ties.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub rule: SplitRule,
    /// SSE(parent) - SSE(left) - SSE(right), raw sum-of-squares units.
    pub gain: f64,
    pub n_left: usize,
    pub n_right: usize,
}

/// Best split over every row and feature of `x`.
pub fn best_split(x: &ScoredMatrix, min_leaf: usize) -> Option<SplitCandidate> {
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    let features: Vec<usize> = (0..x.n_features()).collect();
    best_split_rows(x, &rows, &features, min_leaf)
}

/// Midpoint between two consecutive distinct values that still separates
/// them under `< threshold`.
pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    if mid > a && mid <= b {
        mid
    } else {
        b
    }
}

/// Best split of `rows` (a multiset) among `features`.
///
/// Candidate thresholds are midpoints between consecutive distinct values.
/// The gain of a split into (L, R) equals n_L n_R / n (mean_L - mean_R)^2.
/// Ties go to the lowest feature index, then the smallest threshold.
/// Returns `None` when no split leaves `min_leaf` rows on both sides or no
/// split has positive gain.
pub fn best_split_rows(
    x: &ScoredMatrix,
    rows: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<SplitCandidate> {
    let n = rows.len();
    let min_leaf = min_leaf.max(1);
    if n < 2 * min_leaf {
        return None;
    }
    let parent = stats_of(x, rows);
    if !(parent.sse > 0.0) {
        return None;
    }
    let mut features = features.to_vec();
    features.sort_unstable();
    features.dedup();

    let mut best: Option<SplitCandidate> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    for &f in &features {
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (x.value(r, f), x.response[r] - parent.mean)));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        if pairs[0].0 == pairs[n - 1].0 {
            continue;
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let mut left_sum = 0.0;
        for i in 1..n {
            left_sum += pairs[i - 1].1;
            if pairs[i - 1].0 == pairs[i].0 || i < min_leaf || n - i < min_leaf {
                continue;
            }
            let (nl, nr) = (i as f64, (n - i) as f64);
            let diff = left_sum / nl - (total - left_sum) / nr;
            let gain = nl * nr / n as f64 * diff * diff;
            let better = match &best {
                None => true,
                Some(b) => gain > b.gain + TIE_EPS * b.gain.abs(),
            };
            if better {
                best = Some(SplitCandidate {
                    rule: SplitRule {
                        feature: f,
                        threshold: midpoint(pairs[i - 1].0, pairs[i].0),
                    },
                    gain,
                    n_left: i,
                    n_right: n - i,
                });
            }
        }
    }
    best.filter(|b| b.gain > TIE_EPS * parent.sse)
}
