//! Relevance clustering and method selection.
//!
//! Papers are grouped into `k` clusters (default three: high, medium, low
//! relevance) by three methods. Each method is scored on its high-relevance
//! cluster by mean relevance, silhouette, and size; the z-scored weighted
//! composite picks the winner.

mod agglomerative;
mod gmm;
mod kmeans;
mod silhouette;

pub use agglomerative::{agglomerative, ward_merge_sequence, MergeStep};
pub use gmm::{gmm, GmmParams, GmmResult};
pub use kmeans::{kmeans, KMeansParams, KMeansResult};
pub use silhouette::{cluster_mean_silhouette, mean_silhouette, silhouette_samples};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    KMeans,
    Gmm,
    Agglomerative,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::KMeans, Method::Gmm, Method::Agglomerative];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::KMeans => "kmeans",
            Method::Gmm => "gmm",
            Method::Agglomerative => "agglomerative",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kmeans" | "k-means" => Some(Method::KMeans),
            "gmm" => Some(Method::Gmm),
            "agglomerative" | "ac" | "ward" => Some(Method::Agglomerative),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Evaluation triple computed on the high-relevance cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub mean_relevance_high: f64,
    pub silhouette_high: f64,
    pub size_high: usize,
}

/// The result of one clustering method on one corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusteringOutcome {
    pub method: Method,
    pub labels: Vec<usize>,
    pub high_cluster: usize,
    pub metrics: MethodMetrics,
    /// Mean silhouette over the whole partition, emitted as a diagnostic
    /// alongside the high-cluster-restricted value that drives selection.
    pub silhouette_full: f64,
    pub seed: u64,
}

/// Weights of the composite score; must be non-negative and sum to 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CompositeWeights {
    #[serde(default = "default_w_relevance")]
    pub relevance: f64,
    #[serde(default = "default_w_silhouette")]
    pub silhouette: f64,
    #[serde(default = "default_w_size")]
    pub size: f64,
}

fn default_w_relevance() -> f64 {
    0.5
}

fn default_w_silhouette() -> f64 {
    0.2
}

fn default_w_size() -> f64 {
    0.3
}

impl Default for CompositeWeights {
    fn default() -> Self {
        CompositeWeights {
            relevance: default_w_relevance(),
            silhouette: default_w_silhouette(),
            size: default_w_size(),
        }
    }
}

impl CompositeWeights {
    pub fn validate(&self) -> Result<(), ClusterError> {
        let parts = [self.relevance, self.silhouette, self.size];
        if parts.iter().any(|&w| w < 0.0) {
            return Err(ClusterError::InvalidWeights(
                "weights must be non-negative".into(),
            ));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ClusterError::InvalidWeights(format!(
                "weights must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

/// Tuning knobs for the clustering methods.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ClusteringParams {
    #[serde(default)]
    pub kmeans: KMeansParams,
    #[serde(default)]
    pub gmm: GmmParams,
}

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("component {component} covariance is not positive definite even after ridging")]
    CovarianceCollapse { component: usize },
    #[error("silhouette requires at least two non-empty clusters")]
    SingleCluster,
    #[error("invalid composite weights: {0}")]
    InvalidWeights(String),
    #[error("no clustering methods configured")]
    NoMethods,
}

/// Dispatches one method on the projected matrix.
pub fn run_method(
    method: Method,
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    params: &ClusteringParams,
) -> Result<Vec<usize>, ClusterError> {
    match method {
        Method::KMeans => Ok(kmeans(points, k, seed, &params.kmeans)?.labels),
        Method::Gmm => Ok(gmm(points, k, seed, &params.gmm)?.labels),
        Method::Agglomerative => agglomerative(points, k),
    }
}

/// The cluster whose members have the highest mean raw relevance. Ties break
/// toward the larger cluster, then the lower id.
pub fn identify_high_cluster(labels: &[usize], k: usize, mean_relevance: &[f64]) -> usize {
    assert_eq!(labels.len(), mean_relevance.len());
    let mut sums = vec![0.0f64; k];
    let mut counts = vec![0usize; k];
    for (&label, &relevance) in labels.iter().zip(mean_relevance) {
        sums[label] += relevance;
        counts[label] += 1;
    }

    let mut best = 0usize;
    let mut best_mean = f64::NEG_INFINITY;
    for c in 0..k {
        if counts[c] == 0 {
            continue;
        }
        let mean = sums[c] / counts[c] as f64;
        let better = mean > best_mean
            || (mean == best_mean && counts[c] > counts[best])
            || (mean == best_mean && counts[c] == counts[best] && c < best);
        if better {
            best = c;
            best_mean = mean;
        }
    }
    best
}

/// Runs silhouettes and high-cluster metrics for a fitted labeling.
pub fn evaluate_outcome(
    method: Method,
    points: &[Vec<f64>],
    labels: Vec<usize>,
    k: usize,
    mean_relevance: &[f64],
    seed: u64,
) -> Result<ClusteringOutcome, ClusterError> {
    let scores = silhouette_samples(points, &labels)?;
    let high_cluster = identify_high_cluster(&labels, k, mean_relevance);

    let mut sum = 0.0;
    let mut size_high = 0usize;
    for (&label, &relevance) in labels.iter().zip(mean_relevance) {
        if label == high_cluster {
            sum += relevance;
            size_high += 1;
        }
    }
    let metrics = MethodMetrics {
        mean_relevance_high: sum / size_high as f64,
        silhouette_high: cluster_mean_silhouette(&scores, &labels, high_cluster),
        size_high,
    };

    Ok(ClusteringOutcome {
        method,
        labels,
        high_cluster,
        metrics,
        silhouette_full: mean_silhouette(&scores),
        seed,
    })
}

/// Ranking produced by [`composite_select`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompositeSelection {
    /// Composite score per input entry, in input order.
    pub composites: Vec<f64>,
    pub winner_index: usize,
    pub winner: Method,
}

/// Z-scores each metric across the candidate methods (population divisor; a
/// metric that is constant across methods contributes zeros) and combines
/// them with the given weights. The winner is the argmax; ties break toward
/// the higher raw high-cluster mean relevance, then input order.
pub fn composite_select(
    entries: &[(Method, MethodMetrics)],
    weights: &CompositeWeights,
) -> Result<CompositeSelection, ClusterError> {
    weights.validate()?;
    if entries.is_empty() {
        return Err(ClusterError::NoMethods);
    }

    let relevance: Vec<f64> = entries.iter().map(|(_, m)| m.mean_relevance_high).collect();
    let silhouette: Vec<f64> = entries.iter().map(|(_, m)| m.silhouette_high).collect();
    let size: Vec<f64> = entries.iter().map(|(_, m)| m.size_high as f64).collect();

    let z_rel = zscore_across(&relevance);
    let z_sil = zscore_across(&silhouette);
    let z_size = zscore_across(&size);

    let composites: Vec<f64> = (0..entries.len())
        .map(|i| {
            weights.relevance * z_rel[i] + weights.silhouette * z_sil[i] + weights.size * z_size[i]
        })
        .collect();

    let mut winner_index = 0usize;
    for i in 1..entries.len() {
        let better = composites[i] > composites[winner_index]
            || (composites[i] == composites[winner_index]
                && entries[i].1.mean_relevance_high > entries[winner_index].1.mean_relevance_high);
        if better {
            winner_index = i;
        }
    }

    Ok(CompositeSelection {
        composites,
        winner_index,
        winner: entries[winner_index].0,
    })
}

fn zscore_across(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd < 1e-15 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean) / sd).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn high_cluster_is_argmax_of_mean_relevance() {
        let labels = vec![0, 0, 1, 1, 2, 2];
        let relevance = vec![0.5, 0.5, 0.3, 0.3, 0.1, 0.1];
        assert_eq!(identify_high_cluster(&labels, 3, &relevance), 0);
    }

    #[test]
    fn high_cluster_is_label_permutation_equivariant() {
        let labels = vec![0, 0, 1, 1, 2, 2];
        let relevance = vec![0.1, 0.1, 0.5, 0.5, 0.3, 0.3];
        assert_eq!(identify_high_cluster(&labels, 3, &relevance), 1);
        // Swap labels 0 <-> 1.
        let swapped: Vec<usize> = labels
            .iter()
            .map(|&l| match l {
                0 => 1,
                1 => 0,
                other => other,
            })
            .collect();
        assert_eq!(identify_high_cluster(&swapped, 3, &relevance), 0);
    }

    #[test]
    fn high_cluster_tie_prefers_larger_cluster() {
        // Exactly representable relevance so both cluster means tie exactly;
        // the size-10 cluster beats the size-5 one.
        let relevance = vec![0.5; 15];
        let labels = vec![0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        assert_eq!(identify_high_cluster(&labels, 2, &relevance), 0);

        let labels2 = vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1];
        assert_eq!(identify_high_cluster(&labels2, 2, &relevance), 1);
    }

    fn reported_metrics() -> Vec<(Method, MethodMetrics)> {
        vec![
            (
                Method::KMeans,
                MethodMetrics {
                    mean_relevance_high: 0.507,
                    silhouette_high: 0.352,
                    size_high: 24,
                },
            ),
            (
                Method::Gmm,
                MethodMetrics {
                    mean_relevance_high: 0.503,
                    silhouette_high: 0.288,
                    size_high: 22,
                },
            ),
            (
                Method::Agglomerative,
                MethodMetrics {
                    mean_relevance_high: 0.481,
                    silhouette_high: 0.403,
                    size_high: 50,
                },
            ),
        ]
    }

    #[test]
    fn composite_selects_kmeans_on_reference_metrics() {
        let selection =
            composite_select(&reported_metrics(), &CompositeWeights::default()).unwrap();
        assert_eq!(selection.winner, Method::KMeans);
        // Hand-computed with population z-scores and 0.5/0.2/0.3 weights.
        let expected = [
            0.2676546000124903,
            -0.2264127459750535,
            -0.041241854037443626,
        ];
        for (got, want) in selection.composites.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn composite_identical_metrics_tie_breaks_deterministically() {
        let metrics = MethodMetrics {
            mean_relevance_high: 0.4,
            silhouette_high: 0.3,
            size_high: 10,
        };
        let entries = vec![
            (Method::KMeans, metrics),
            (Method::Gmm, metrics),
            (Method::Agglomerative, metrics),
        ];
        let selection = composite_select(&entries, &CompositeWeights::default()).unwrap();
        assert!(selection.composites.iter().all(|&c| c == 0.0));
        assert_eq!(selection.winner, Method::KMeans);
    }

    #[test]
    fn composite_is_invariant_to_affine_rescaling_of_one_metric() {
        let base = reported_metrics();
        let rescaled: Vec<(Method, MethodMetrics)> = base
            .iter()
            .map(|(m, metrics)| {
                let mut scaled = *metrics;
                scaled.silhouette_high = 10.0 * metrics.silhouette_high + 3.0;
                (*m, scaled)
            })
            .collect();
        let a = composite_select(&base, &CompositeWeights::default()).unwrap();
        let b = composite_select(&rescaled, &CompositeWeights::default()).unwrap();
        for (x, y) in a.composites.iter().zip(&b.composites) {
            assert!((x - y).abs() < 1e-9);
        }
        assert_eq!(a.winner, b.winner);
    }

    #[test]
    fn composite_works_for_a_single_method() {
        let entries = vec![(
            Method::Gmm,
            MethodMetrics {
                mean_relevance_high: 0.4,
                silhouette_high: 0.2,
                size_high: 9,
            },
        )];
        let selection = composite_select(&entries, &CompositeWeights::default()).unwrap();
        assert_eq!(selection.winner, Method::Gmm);
        assert_eq!(selection.composites, vec![0.0]);
    }

    #[test]
    fn invalid_weights_are_rejected() {
        let entries = reported_metrics();
        let bad = CompositeWeights {
            relevance: 0.9,
            silhouette: 0.2,
            size: 0.3,
        };
        assert!(matches!(
            composite_select(&entries, &bad),
            Err(ClusterError::InvalidWeights(_))
        ));
    }

    #[test]
    fn metrics_are_invariant_to_label_permutation() {
        let points = vec![
            vec![0.0, 0.0],
            vec![0.2, 0.0],
            vec![5.0, 5.0],
            vec![5.2, 5.0],
            vec![-5.0, 5.0],
            vec![-5.2, 5.0],
        ];
        let relevance = vec![0.9, 0.9, 0.4, 0.4, 0.1, 0.1];
        let labels = vec![0, 0, 1, 1, 2, 2];
        let permuted: Vec<usize> = labels.iter().map(|&l| (l + 1) % 3).collect();

        let a = evaluate_outcome(Method::KMeans, &points, labels, 3, &relevance, 0).unwrap();
        let b = evaluate_outcome(Method::KMeans, &points, permuted, 3, &relevance, 0).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.silhouette_full, b.silhouette_full);
    }
}
