//! Agglomerative clustering with Ward linkage.
//!
//! Maintains the pairwise merge-cost matrix under Lance-Williams updates and
//! greedily merges the globally cheapest pair each step. The cost between
//! clusters A and B is `2 * |A||B| / (|A|+|B|) * ||mean_A - mean_B||^2`, i.e.
//! twice the within-cluster variance increase of the merge, which for
//! singletons equals the squared point distance. Ties break toward the
//! lowest (a, b) representative pair, and a merged cluster keeps the smaller
//! representative, so the merge sequence is deterministic.

use super::ClusterError;
use crate::linalg::squared_euclidean;

/// One merge in the dendrogram: representatives `a < b` joined at `cost`.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeStep {
    pub a: usize,
    pub b: usize,
    pub cost: f64,
}

/// Runs the full Ward linkage, returning the N-1 merge steps in order.
pub fn ward_merge_sequence(points: &[Vec<f64>]) -> Vec<MergeStep> {
    let n = points.len();
    let mut cost = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = squared_euclidean(&points[i], &points[j]);
            cost[i][j] = d;
            cost[j][i] = d;
        }
    }

    let mut active: Vec<usize> = (0..n).collect();
    let mut sizes = vec![1usize; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    while active.len() > 1 {
        let mut best: Option<(usize, usize, f64)> = None;
        for (ai, &i) in active.iter().enumerate() {
            for &j in &active[ai + 1..] {
                let c = cost[i][j];
                let take = match best {
                    None => true,
                    Some((_, _, current)) => c < current,
                };
                if take {
                    best = Some((i, j, c));
                }
            }
        }
        let (i, j, merge_cost) = best.expect("two active clusters");

        // Lance-Williams update of every other cluster's cost to the union.
        for &h in &active {
            if h == i || h == j {
                continue;
            }
            let (si, sj, sh) = (sizes[i] as f64, sizes[j] as f64, sizes[h] as f64);
            let updated = ((sh + si) * cost[i][h] + (sh + sj) * cost[j][h] - sh * merge_cost)
                / (si + sj + sh);
            cost[i][h] = updated;
            cost[h][i] = updated;
        }
        sizes[i] += sizes[j];
        active.retain(|&c| c != j);
        merges.push(MergeStep {
            a: i,
            b: j,
            cost: merge_cost,
        });
    }
    merges
}

/// Cuts the Ward dendrogram at `k` clusters. Labels are assigned by
/// ascending cluster representative, so output is stable.
pub fn agglomerative(points: &[Vec<f64>], k: usize) -> Result<Vec<usize>, ClusterError> {
    let n = points.len();
    if k == 0 || n < k {
        return Err(ClusterError::TooFewPoints {
            needed: k.max(1),
            got: n,
        });
    }

    let merges = ward_merge_sequence(points);
    let mut assignment: Vec<usize> = (0..n).collect();
    for step in merges.iter().take(n - k) {
        for slot in assignment.iter_mut() {
            if *slot == step.b {
                *slot = step.a;
            }
        }
    }

    let mut representatives: Vec<usize> = assignment.to_vec();
    representatives.sort_unstable();
    representatives.dedup();
    debug_assert_eq!(representatives.len(), k);

    let labels = assignment
        .iter()
        .map(|rep| representatives.binary_search(rep).expect("active rep"))
        .collect();
    Ok(labels)
}
