//! Small dense linear-algebra routines for the statement-space matrices.
//!
//! Everything here operates on `Vec<Vec<f64>>` in row-major layout. The
//! matrices involved are tiny (S x S where S is the statement count), so a
//! cyclic Jacobi sweep is both fast enough and fully deterministic.

// Index-based loops mirror the textbook formulas here.
#![allow(clippy::needless_range_loop)]

/// Eigendecomposition of a symmetric matrix via cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` sorted by descending eigenvalue;
/// `eigenvectors[i]` is the unit eigenvector paired with `eigenvalues[i]`.
pub(crate) fn sym_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    // v starts as identity and accumulates the rotations; v[c] ends up as the
    // eigenvector for a[c][c].
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    let frob: f64 = a
        .iter()
        .flat_map(|row| row.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    let tol = 1e-15 * frob.max(1.0);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = a[p][p];
                let aqq = a[q][q];
                // Stable rotation angle (Golub & Van Loan).
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Descending eigenvalue; index ascending on exact ties for determinism.
    order.sort_by(|&i, &j| {
        a[j][j]
            .partial_cmp(&a[i][i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });

    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row][col]).collect())
        .collect();
    (eigenvalues, eigenvectors)
}

/// Gram matrix `X^T X` of an N x S row-major matrix, exactly symmetric.
pub(crate) fn gram(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = x.first().map_or(0, Vec::len);
    let mut g = vec![vec![0.0; cols]; cols];
    for i in 0..cols {
        for j in i..cols {
            let mut acc = 0.0;
            for row in x {
                acc += row[i] * row[j];
            }
            g[i][j] = acc;
            g[j][i] = acc;
        }
    }
    g
}

/// Inverse of a symmetric positive-definite matrix through its
/// eigendecomposition. Returns `None` when the smallest eigenvalue does not
/// exceed `min_eigenvalue`.
pub(crate) fn spd_inverse(matrix: &[Vec<f64>], min_eigenvalue: f64) -> Option<Vec<Vec<f64>>> {
    let n = matrix.len();
    let (values, vectors) = sym_eigen(matrix);
    if values.iter().any(|&l| l <= min_eigenvalue) {
        return None;
    }
    let mut inv = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for (l, vec_k) in values.iter().zip(&vectors) {
                acc += vec_k[i] * vec_k[j] / l;
            }
            inv[i][j] = acc;
            inv[j][i] = acc;
        }
    }
    Some(inv)
}

/// Cholesky factorization `A = L L^T` of a symmetric positive-definite
/// matrix. Returns the lower-triangular factor, or `None` if a pivot is not
/// strictly positive.
pub(crate) fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solves `L y = b` for lower-triangular `L`.
pub(crate) fn forward_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    y
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}
