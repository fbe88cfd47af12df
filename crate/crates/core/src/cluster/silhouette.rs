//! Per-sample silhouette coefficients.
//!
//! `s_i = (b_i - a_i) / max(a_i, b_i)` with Euclidean distances, where `a_i`
//! is the mean distance to the rest of the sample's own cluster and `b_i`
//! the smallest mean distance to any other cluster. Members of singleton
//! clusters score 0 by convention.

use super::ClusterError;
use crate::linalg::euclidean;

pub fn silhouette_samples(points: &[Vec<f64>], labels: &[usize]) -> Result<Vec<f64>, ClusterError> {
    assert_eq!(points.len(), labels.len(), "one label per point");
    let n = points.len();
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);

    let mut counts = vec![0usize; k];
    for &label in labels {
        counts[label] += 1;
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(ClusterError::SingleCluster);
    }

    let mut scores = vec![0.0f64; n];
    for i in 0..n {
        let own = labels[i];
        if counts[own] == 1 {
            scores[i] = 0.0;
            continue;
        }

        let mut sums = vec![0.0f64; k];
        for j in 0..n {
            if j == i {
                continue;
            }
            sums[labels[j]] += euclidean(&points[i], &points[j]);
        }

        let a = sums[own] / (counts[own] - 1) as f64;
        let mut b = f64::INFINITY;
        for c in 0..k {
            if c == own || counts[c] == 0 {
                continue;
            }
            let mean = sums[c] / counts[c] as f64;
            if mean < b {
                b = mean;
            }
        }

        let denom = a.max(b);
        scores[i] = if denom == 0.0 { 0.0 } else { (b - a) / denom };
    }
    Ok(scores)
}

/// Mean silhouette over all samples.
pub fn mean_silhouette(scores: &[f64]) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    scores.iter().sum::<f64>() / scores.len() as f64
}

/// Mean silhouette over the members of one cluster.
pub fn cluster_mean_silhouette(scores: &[f64], labels: &[usize], cluster: usize) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (&score, &label) in scores.iter().zip(labels) {
        if label == cluster {
            sum += score;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}
