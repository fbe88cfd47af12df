//! Lloyd's k-means with k-means++ seeding.
//!
//! Fully deterministic for a fixed (data, k, seed): seeding draws from
//! SplitMix64, restart r uses `seed + r`, ties in assignment and repair break
//! toward the lowest index.

use serde::{Deserialize, Serialize};

use super::ClusterError;
use crate::linalg::{euclidean, squared_euclidean};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KMeansParams {
    #[serde(default = "default_restarts")]
    pub restarts: u32,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Lloyd stops when no centroid moves more than this.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_restarts() -> u32 {
    10
}

fn default_max_iterations() -> usize {
    300
}

fn default_tolerance() -> f64 {
    1e-6
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            restarts: default_restarts(),
            max_iterations: default_max_iterations(),
            tolerance: default_tolerance(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub iterations: usize,
}

/// Runs `params.restarts` seeded restarts and keeps the lowest-inertia fit.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    params: &KMeansParams,
) -> Result<KMeansResult, ClusterError> {
    if k == 0 {
        return Err(ClusterError::TooFewPoints { needed: 1, got: 0 });
    }
    if points.len() < k {
        return Err(ClusterError::TooFewPoints {
            needed: k,
            got: points.len(),
        });
    }

    let restarts = params.restarts.max(1);
    let mut best: Option<KMeansResult> = None;
    for restart in 0..restarts {
        let restart_seed = seed.wrapping_add(u64::from(restart));
        let candidate = kmeans_single(points, k, restart_seed, params);
        let better = match &best {
            None => true,
            Some(current) => candidate.inertia < current.inertia,
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn kmeans_single(points: &[Vec<f64>], k: usize, seed: u64, params: &KMeansParams) -> KMeansResult {
    let mut rng = SplitMix64::new(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut labels = vec![0usize; points.len()];
    assign(points, &centroids, &mut labels);
    repair_empty_clusters(points, &mut labels, &mut centroids);

    let mut iterations = 0usize;
    while iterations < params.max_iterations {
        let new_centroids = cluster_means(points, &labels, k);
        let shift = centroids
            .iter()
            .zip(&new_centroids)
            .map(|(a, b)| euclidean(a, b))
            .fold(0.0f64, f64::max);
        centroids = new_centroids;
        iterations += 1;

        assign(points, &centroids, &mut labels);
        repair_empty_clusters(points, &mut labels, &mut centroids);
        if shift < params.tolerance {
            break;
        }
    }

    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &c)| squared_euclidean(p, &centroids[c]))
        .sum();

    KMeansResult {
        labels,
        centroids,
        inertia,
        iterations,
    }
}

/// k-means++: first centroid uniform, the rest proportional to the squared
/// distance to the nearest chosen centroid.
fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut SplitMix64) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.gen_index(n)].clone());

    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_euclidean(p, &centroids[0]))
        .collect();

    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let chosen = if total <= 0.0 {
            // All remaining points coincide with chosen centroids.
            rng.gen_index(n)
        } else {
            let target = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target {
                    pick = i;
                    break;
                }
            }
            pick
        };
        centroids.push(points[chosen].clone());
        for (i, point) in points.iter().enumerate() {
            let d = squared_euclidean(point, centroids.last().unwrap());
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>], labels: &mut [usize]) {
    for (i, point) in points.iter().enumerate() {
        let mut best = 0usize;
        let mut best_d = squared_euclidean(point, &centroids[0]);
        for (c, centroid) in centroids.iter().enumerate().skip(1) {
            let d = squared_euclidean(point, centroid);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        labels[i] = best;
    }
}

/// Gives each empty cluster the point currently farthest from its own
/// centroid; that point becomes the cluster's centroid. Never steals from
/// singleton clusters.
fn repair_empty_clusters(points: &[Vec<f64>], labels: &mut [usize], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &label in labels.iter() {
        counts[label] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut farthest: Option<(usize, f64)> = None;
        for (i, point) in points.iter().enumerate() {
            if counts[labels[i]] < 2 {
                continue;
            }
            let d = squared_euclidean(point, &centroids[labels[i]]);
            let take = match farthest {
                None => true,
                Some((_, best)) => d > best,
            };
            if take {
                farthest = Some((i, d));
            }
        }
        if let Some((i, _)) = farthest {
            counts[labels[i]] -= 1;
            labels[i] = empty;
            counts[empty] += 1;
            centroids[empty] = points[i].clone();
        }
    }
}

fn cluster_means(points: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0f64; dim]; k];
    let mut counts = vec![0usize; k];
    for (point, &label) in points.iter().zip(labels) {
        counts[label] += 1;
        for (slot, value) in sums[label].iter_mut().zip(point) {
            *slot += value;
        }
    }
    for (sum, &count) in sums.iter_mut().zip(&counts) {
        if count > 0 {
            for slot in sum.iter_mut() {
                *slot /= count as f64;
            }
        }
    }
    sums
}
