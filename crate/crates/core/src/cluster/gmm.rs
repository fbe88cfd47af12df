//! Gaussian mixture fitting by expectation-maximization.
//!
//! Full covariances with a fixed diagonal ridge, initialized from the
//! k-means solution under the same seed. The log-likelihood trace is
//! recorded per E-step; EM guarantees it never decreases.

use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, KMeansParams};
use super::ClusterError;
use crate::linalg::{cholesky, forward_solve};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmmParams {
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// EM stops when the log-likelihood gain drops below this.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Added to every covariance diagonal to keep factorizations stable.
    #[serde(default = "default_ridge")]
    pub covariance_ridge: f64,
    /// Parameters of the k-means initialization.
    #[serde(default)]
    pub init: KMeansParams,
}

fn default_max_iterations() -> usize {
    200
}

fn default_tolerance() -> f64 {
    1e-4
}

fn default_ridge() -> f64 {
    1e-6
}

impl Default for GmmParams {
    fn default() -> Self {
        GmmParams {
            max_iterations: default_max_iterations(),
            tolerance: default_tolerance(),
            covariance_ridge: default_ridge(),
            init: KMeansParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmmResult {
    pub labels: Vec<usize>,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
    /// Total log-likelihood after each E-step.
    pub log_likelihood_trace: Vec<f64>,
    pub iterations: usize,
}

struct Component {
    log_weight: f64,
    mean: Vec<f64>,
    chol: Vec<Vec<f64>>,
    log_det: f64,
}

/// Fits a `k`-component full-covariance mixture. Requires at least
/// `k * (dim + 1)` points so every component can support a mean and spread.
pub fn gmm(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    params: &GmmParams,
) -> Result<GmmResult, ClusterError> {
    if k == 0 {
        return Err(ClusterError::TooFewPoints { needed: 1, got: 0 });
    }
    let n = points.len();
    let dim = points.first().map_or(0, Vec::len);
    let needed = k * (dim + 1);
    if n < needed {
        return Err(ClusterError::TooFewPoints { needed, got: n });
    }

    let init = kmeans(points, k, seed, &params.init)?;
    let mut weights = vec![0.0f64; k];
    for &label in &init.labels {
        weights[label] += 1.0;
    }
    for w in weights.iter_mut() {
        *w /= n as f64;
    }
    let mut means = init.centroids;
    let mut covariances: Vec<Vec<Vec<f64>>> = (0..k)
        .map(|c| {
            cluster_covariance(
                points,
                &init.labels,
                c,
                &means[c],
                dim,
                params.covariance_ridge,
            )
        })
        .collect();

    let mut responsibilities = vec![vec![0.0f64; k]; n];
    let mut trace = Vec::new();
    let mut iterations = 0usize;

    loop {
        let components = build_components(&weights, &means, &covariances)?;
        let log_likelihood = e_step(points, &components, &mut responsibilities);
        trace.push(log_likelihood);
        iterations += 1;

        let converged = trace.len() >= 2 && {
            let prev = trace[trace.len() - 2];
            log_likelihood - prev < params.tolerance
        };
        if converged || iterations >= params.max_iterations {
            break;
        }

        m_step(
            points,
            &responsibilities,
            &mut weights,
            &mut means,
            &mut covariances,
            params.covariance_ridge,
        );
    }

    let labels = responsibilities
        .iter()
        .map(|row| {
            let mut best = 0usize;
            let mut best_r = row[0];
            for (c, &r) in row.iter().enumerate().skip(1) {
                if r > best_r {
                    best_r = r;
                    best = c;
                }
            }
            best
        })
        .collect();

    Ok(GmmResult {
        labels,
        weights,
        means,
        covariances,
        log_likelihood_trace: trace,
        iterations,
    })
}

#[allow(clippy::needless_range_loop)]
fn cluster_covariance(
    points: &[Vec<f64>],
    labels: &[usize],
    cluster: usize,
    mean: &[f64],
    dim: usize,
    ridge: f64,
) -> Vec<Vec<f64>> {
    let mut cov = vec![vec![0.0f64; dim]; dim];
    let mut count = 0usize;
    for (point, &label) in points.iter().zip(labels) {
        if label != cluster {
            continue;
        }
        count += 1;
        for a in 0..dim {
            let da = point[a] - mean[a];
            for b in a..dim {
                let db = point[b] - mean[b];
                cov[a][b] += da * db;
            }
        }
    }
    let denom = count.max(1) as f64;
    for a in 0..dim {
        for b in a..dim {
            cov[a][b] /= denom;
            cov[b][a] = cov[a][b];
        }
        cov[a][a] += ridge;
    }
    cov
}

fn build_components(
    weights: &[f64],
    means: &[Vec<f64>],
    covariances: &[Vec<Vec<f64>>],
) -> Result<Vec<Component>, ClusterError> {
    let mut components = Vec::with_capacity(weights.len());
    for (c, ((&weight, mean), covariance)) in weights.iter().zip(means).zip(covariances).enumerate()
    {
        let chol = cholesky(covariance).ok_or(ClusterError::CovarianceCollapse { component: c })?;
        let log_det = 2.0
            * chol
                .iter()
                .enumerate()
                .map(|(i, row)| row[i].ln())
                .sum::<f64>();
        components.push(Component {
            log_weight: weight.max(f64::MIN_POSITIVE).ln(),
            mean: mean.clone(),
            chol,
            log_det,
        });
    }
    Ok(components)
}

fn log_density(component: &Component, point: &[f64]) -> f64 {
    let dim = point.len();
    let centered: Vec<f64> = point
        .iter()
        .zip(&component.mean)
        .map(|(x, m)| x - m)
        .collect();
    let solved = forward_solve(&component.chol, &centered);
    let quad: f64 = solved.iter().map(|y| y * y).sum();
    -0.5 * (dim as f64 * (2.0 * std::f64::consts::PI).ln() + component.log_det + quad)
}

fn e_step(points: &[Vec<f64>], components: &[Component], responsibilities: &mut [Vec<f64>]) -> f64 {
    let mut total = 0.0f64;
    for (point, resp_row) in points.iter().zip(responsibilities.iter_mut()) {
        for (c, component) in components.iter().enumerate() {
            resp_row[c] = component.log_weight + log_density(component, point);
        }
        let max = resp_row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum_exp = 0.0;
        for value in resp_row.iter_mut() {
            *value = (*value - max).exp();
            sum_exp += *value;
        }
        for value in resp_row.iter_mut() {
            *value /= sum_exp;
        }
        total += max + sum_exp.ln();
    }
    total
}

#[allow(clippy::needless_range_loop)]
fn m_step(
    points: &[Vec<f64>],
    responsibilities: &[Vec<f64>],
    weights: &mut [f64],
    means: &mut [Vec<f64>],
    covariances: &mut [Vec<Vec<f64>>],
    ridge: f64,
) {
    let n = points.len();
    let dim = points[0].len();
    let k = weights.len();

    for c in 0..k {
        let mut mass = 0.0;
        for resp_row in responsibilities {
            mass += resp_row[c];
        }
        weights[c] = mass / n as f64;
        if mass < 1e-10 {
            // A starved component keeps its previous parameters; the ridge
            // keeps its covariance factorizable.
            continue;
        }

        let mut mean = vec![0.0f64; dim];
        for (point, resp_row) in points.iter().zip(responsibilities) {
            let r = resp_row[c];
            for (slot, value) in mean.iter_mut().zip(point) {
                *slot += r * value;
            }
        }
        for slot in mean.iter_mut() {
            *slot /= mass;
        }

        let mut cov = vec![vec![0.0f64; dim]; dim];
        for (point, resp_row) in points.iter().zip(responsibilities) {
            let r = resp_row[c];
            for a in 0..dim {
                let da = point[a] - mean[a];
                for b in a..dim {
                    let db = point[b] - mean[b];
                    cov[a][b] += r * da * db;
                }
            }
        }
        for a in 0..dim {
            for b in a..dim {
                cov[a][b] /= mass;
                cov[b][a] = cov[a][b];
            }
            cov[a][a] += ridge;
        }

        means[c] = mean;
        covariances[c] = cov;
    }
}
