//! Factor-adequacy diagnostics and PCA.
//!
//! The KMO sampling-adequacy score and the condition number jointly decide
//! whether PCA is applied; when it is, components are retained up to a
//! cumulative explained-variance target. All decompositions run on the tiny
//! S x S correlation matrix, so a deterministic Jacobi solver is used
//! throughout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{gram, spd_inverse, sym_eigen};

/// Which matrix the condition number is taken on. The data-matrix reading
/// (ratio of extreme singular values of X) matches the usual ">100 means
/// severe multicollinearity" scale; the correlation-matrix reading is its
/// square (ratio of extreme eigenvalues of R).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CnConvention {
    #[default]
    #[serde(rename = "data-matrix")]
    DataMatrix,
    #[serde(rename = "correlation-matrix")]
    CorrelationMatrix,
}

/// Decision thresholds for the PCA gate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateThresholds {
    #[serde(default = "default_kmo_low")]
    pub kmo_low: f64,
    #[serde(default = "default_kmo_high")]
    pub kmo_high: f64,
    #[serde(default = "default_cn_threshold")]
    pub cn_threshold: f64,
    #[serde(default = "default_variance_target")]
    pub variance_target: f64,
    #[serde(default)]
    pub cn_convention: CnConvention,
}

fn default_kmo_low() -> f64 {
    0.5
}

fn default_kmo_high() -> f64 {
    0.7
}

fn default_cn_threshold() -> f64 {
    100.0
}

fn default_variance_target() -> f64 {
    0.99
}

impl Default for GateThresholds {
    fn default() -> Self {
        GateThresholds {
            kmo_low: default_kmo_low(),
            kmo_high: default_kmo_high(),
            cn_threshold: default_cn_threshold(),
            variance_target: default_variance_target(),
            cn_convention: CnConvention::default(),
        }
    }
}

impl GateThresholds {
    pub fn validate(&self) -> Result<(), NumericsError> {
        if !(0.0 < self.kmo_low && self.kmo_low < self.kmo_high && self.kmo_high < 1.0) {
            return Err(NumericsError::InvalidThresholds(format!(
                "need 0 < kmo_low < kmo_high < 1, got {} and {}",
                self.kmo_low, self.kmo_high
            )));
        }
        if self.cn_threshold <= 1.0 {
            return Err(NumericsError::InvalidThresholds(format!(
                "cn_threshold must exceed 1, got {}",
                self.cn_threshold
            )));
        }
        if !(0.0 < self.variance_target && self.variance_target <= 1.0) {
            return Err(NumericsError::InvalidThresholds(format!(
                "variance_target must be in (0, 1], got {}",
                self.variance_target
            )));
        }
        Ok(())
    }
}

/// Fitted PCA basis over the standardized relevance space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaModel {
    /// All S orthonormal components, descending eigenvalue order;
    /// `components[c][j]` is the loading of input column `j` on component `c`.
    pub components: Vec<Vec<f64>>,
    /// Eigenvalues of the correlation matrix, clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// Per-component share of total variance; sums to 1 over all S.
    pub explained_ratio: Vec<f64>,
    /// Running sums of `explained_ratio`.
    pub cumulative: Vec<f64>,
    /// Number of leading components that reach the variance target.
    pub retained: usize,
    /// Whether the transform actually projects; set by the caller from
    /// [`pca_gate`]. When false, [`pca_transform`] passes input through.
    pub applied: bool,
}

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("invalid gate thresholds: {0}")]
    InvalidThresholds(String),
    #[error("correlation matrix is singular or near-singular")]
    SingularCorrelation,
    #[error("matrix has {got} columns, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("need more rows than columns, got {rows}x{cols}")]
    TooFewRows { rows: usize, cols: usize },
}

/// Correlation matrix `X^T X / N` of a column-standardized matrix.
pub fn correlation_matrix(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len() as f64;
    let mut r = gram(x);
    for row in r.iter_mut() {
        for value in row.iter_mut() {
            *value /= n;
        }
    }
    r
}

/// Kaiser-Meyer-Olkin sampling adequacy.
///
/// With `A = R^-1` and partial correlations `p_ij = -A_ij / sqrt(A_ii A_jj)`,
/// KMO is `sum r_ij^2 / (sum r_ij^2 + sum p_ij^2)` over off-diagonal pairs.
/// A diagonal correlation matrix returns 0 by convention.
#[allow(clippy::needless_range_loop)]
pub fn kmo(r: &[Vec<f64>]) -> Result<f64, NumericsError> {
    let s = r.len();
    let inverse = spd_inverse(r, 1e-10).ok_or(NumericsError::SingularCorrelation)?;

    let mut sum_r2 = 0.0;
    let mut sum_p2 = 0.0;
    for i in 0..s {
        for j in 0..s {
            if i == j {
                continue;
            }
            sum_r2 += r[i][j] * r[i][j];
            let partial = -inverse[i][j] / (inverse[i][i] * inverse[j][j]).sqrt();
            sum_p2 += partial * partial;
        }
    }
    if sum_r2 == 0.0 {
        return Ok(0.0);
    }
    Ok(sum_r2 / (sum_r2 + sum_p2))
}

/// Condition number of the data matrix: the ratio of its extreme singular
/// values, computed as `sqrt(lambda_max / lambda_min)` of `X^T X`. Returns
/// infinity when the smallest singular value vanishes relative to the
/// largest.
pub fn condition_number(x: &[Vec<f64>]) -> f64 {
    let g = gram(x);
    let (eigenvalues, _) = sym_eigen(&g);
    let sigma_max = eigenvalues.first().copied().unwrap_or(0.0).max(0.0).sqrt();
    let sigma_min = eigenvalues.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    if sigma_min < 1e-12 * sigma_max {
        f64::INFINITY
    } else {
        sigma_max / sigma_min
    }
}

/// Condition number under a chosen convention. The correlation-matrix
/// reading is the square of the data-matrix reading, since the eigenvalues
/// of `X^T X / N` are the squared singular values of `X` over N.
pub fn condition_number_with(x: &[Vec<f64>], convention: CnConvention) -> f64 {
    let cn = condition_number(x);
    match convention {
        CnConvention::DataMatrix => cn,
        CnConvention::CorrelationMatrix => cn * cn,
    }
}

/// The apply/skip decision: below `kmo_low` never, above `kmo_high` always,
/// in between only under severe multicollinearity (`cn > cn_threshold`).
pub fn pca_gate(kmo: f64, cn: f64, thresholds: &GateThresholds) -> bool {
    if kmo < thresholds.kmo_low {
        false
    } else if kmo > thresholds.kmo_high {
        true
    } else {
        cn > thresholds.cn_threshold
    }
}

/// Fits PCA on a standardized matrix: eigendecomposition of the correlation
/// matrix, components sorted by descending eigenvalue, retained count chosen
/// as the smallest prefix reaching `variance_target`.
///
/// Sign convention: each component's largest-magnitude coordinate is made
/// positive, so output is deterministic across runs and platforms.
pub fn pca_fit(x: &[Vec<f64>], thresholds: &GateThresholds) -> Result<PcaModel, NumericsError> {
    let rows = x.len();
    let cols = x.first().map_or(0, Vec::len);
    if rows <= cols {
        return Err(NumericsError::TooFewRows { rows, cols });
    }

    let r = correlation_matrix(x);
    let (raw_eigenvalues, mut components) = sym_eigen(&r);

    let eigenvalues: Vec<f64> = raw_eigenvalues
        .iter()
        .map(|&l| if l < 1e-10 { 0.0 } else { l })
        .collect();

    for component in components.iter_mut() {
        let mut pivot = 0;
        let mut best = 0.0;
        for (j, &value) in component.iter().enumerate() {
            if value.abs() > best {
                best = value.abs();
                pivot = j;
            }
        }
        if component[pivot] < 0.0 {
            for value in component.iter_mut() {
                *value = -*value;
            }
        }
    }

    let total: f64 = eigenvalues.iter().sum();
    let explained_ratio: Vec<f64> = if total > 0.0 {
        eigenvalues.iter().map(|&l| l / total).collect()
    } else {
        vec![0.0; eigenvalues.len()]
    };
    let mut cumulative = Vec::with_capacity(explained_ratio.len());
    let mut acc = 0.0;
    for &ratio in &explained_ratio {
        acc += ratio;
        cumulative.push(acc);
    }

    let retained = cumulative
        .iter()
        .position(|&c| c >= thresholds.variance_target)
        .map(|p| p + 1)
        .unwrap_or(cumulative.len());

    Ok(PcaModel {
        components,
        eigenvalues,
        explained_ratio,
        cumulative,
        retained,
        applied: true,
    })
}

/// Projects onto the retained components, or passes the input through
/// unchanged when the gate decided against PCA.
pub fn pca_transform(x: &[Vec<f64>], model: &PcaModel) -> Result<Vec<Vec<f64>>, NumericsError> {
    if !model.applied {
        return Ok(x.to_vec());
    }
    let cols = model.components.len();
    let mut out = Vec::with_capacity(x.len());
    for row in x {
        if row.len() != cols {
            return Err(NumericsError::DimensionMismatch {
                expected: cols,
                got: row.len(),
            });
        }
        let projected: Vec<f64> = model.components[..model.retained]
            .iter()
            .map(|component| row.iter().zip(component).map(|(a, b)| a * b).sum())
            .collect();
        out.push(projected);
    }
    Ok(out)
}
