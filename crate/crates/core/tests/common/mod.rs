//! Independent oracles for the acceptance suite.
//!
//! Each oracle recomputes its quantity by a different route than the library
//! (cofactor inverses instead of eigendecompositions, per-step recomputation
//! instead of Lance-Williams updates, a separate definitional silhouette),
//! so agreement is evidence, not tautology.

/// Determinant by Laplace expansion along the first row. Fine for the small
/// matrices the KMO oracle sees.
pub fn determinant(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    match n {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            let mut det = 0.0;
            for col in 0..n {
                let minor = minor_matrix(m, 0, col);
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                det += sign * m[0][col] * determinant(&minor);
            }
            det
        }
    }
}

fn minor_matrix(m: &[Vec<f64>], drop_row: usize, drop_col: usize) -> Vec<Vec<f64>> {
    m.iter()
        .enumerate()
        .filter(|(r, _)| *r != drop_row)
        .map(|(_, row)| {
            row.iter()
                .enumerate()
                .filter(|(c, _)| *c != drop_col)
                .map(|(_, &v)| v)
                .collect()
        })
        .collect()
}

/// Matrix inverse via the adjugate (cofactor) formula.
#[allow(clippy::needless_range_loop)]
pub fn cofactor_inverse(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let det = determinant(m);
    if det.abs() < 1e-12 {
        return None;
    }
    let mut inverse = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            // Adjugate transposes the cofactor matrix.
            inverse[j][i] = sign * determinant(&minor_matrix(m, i, j)) / det;
        }
    }
    Some(inverse)
}

/// KMO from the cofactor inverse: partial correlations
/// `p_ij = -A_ij / sqrt(A_ii A_jj)`, then
/// `sum r^2 / (sum r^2 + sum p^2)` over off-diagonal pairs.
pub fn kmo_cofactor_oracle(r: &[Vec<f64>]) -> Option<f64> {
    let inverse = cofactor_inverse(r)?;
    let n = r.len();
    let mut sum_r2 = 0.0;
    let mut sum_p2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            sum_r2 += r[i][j] * r[i][j];
            let p = -inverse[i][j] / (inverse[i][i] * inverse[j][j]).sqrt();
            sum_p2 += p * p;
        }
    }
    if sum_r2 == 0.0 {
        return Some(0.0);
    }
    Some(sum_r2 / (sum_r2 + sum_p2))
}

/// Exhaustive Ward linkage: every step recomputes all pairwise merge costs
/// from the raw points (`2 |A||B| / (|A|+|B|) * ||mean_A - mean_B||^2`),
/// merging the cheapest pair with the lowest representative indices on ties.
/// Returns the merge sequence as (representative_a, representative_b) pairs
/// with their costs.
pub fn ward_oracle(points: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    // Clusters keyed by representative (minimum member index).
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut merges = Vec::new();

    let mean = |members: &[usize]| -> Vec<f64> {
        let dim = points[0].len();
        let mut m = vec![0.0; dim];
        for &i in members {
            for (slot, v) in m.iter_mut().zip(&points[i]) {
                *slot += v;
            }
        }
        for slot in m.iter_mut() {
            *slot /= members.len() as f64;
        }
        m
    };

    while clusters.len() > 1 {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let (ma, mb) = (mean(&clusters[a].1), mean(&clusters[b].1));
                let dist2: f64 = ma.iter().zip(&mb).map(|(x, y)| (x - y) * (x - y)).sum();
                let (sa, sb) = (clusters[a].1.len() as f64, clusters[b].1.len() as f64);
                let cost = 2.0 * sa * sb / (sa + sb) * dist2;
                let take = match best {
                    None => true,
                    Some((_, _, c)) => cost < c,
                };
                if take {
                    best = Some((a, b, cost));
                }
            }
        }
        let (a, b, cost) = best.unwrap();
        let (rep_a, rep_b) = (clusters[a].0, clusters[b].0);
        let members_b = clusters[b].1.clone();
        clusters[a].1.extend(members_b);
        clusters.remove(b);
        merges.push((rep_a.min(rep_b), rep_a.max(rep_b), cost));
    }
    merges
}

/// Definitional silhouette: for each sample, loop over every cluster and
/// every point. Arithmetic deliberately mirrors the definition, summing in
/// index order.
pub fn silhouette_oracle(points: &[Vec<f64>], labels: &[usize]) -> Vec<f64> {
    let n = points.len();
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let dist = |i: usize, j: usize| -> f64 {
        let mut acc = 0.0;
        for (x, y) in points[i].iter().zip(&points[j]) {
            let d = x - y;
            acc += d * d;
        }
        acc.sqrt()
    };

    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }

    let mut scores = vec![0.0; n];
    for i in 0..n {
        let own = labels[i];
        if counts[own] == 1 {
            scores[i] = 0.0;
            continue;
        }
        let mut sums = vec![0.0f64; k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += dist(i, j);
            }
        }
        let a = sums[own] / (counts[own] - 1) as f64;
        let mut b = f64::INFINITY;
        for c in 0..k {
            if c != own && counts[c] > 0 {
                let mean = sums[c] / counts[c] as f64;
                if mean < b {
                    b = mean;
                }
            }
        }
        let denom = a.max(b);
        scores[i] = if denom == 0.0 { 0.0 } else { (b - a) / denom };
    }
    scores
}

/// Independent composite-score oracle: population z-scores per metric, then
/// the weighted sum.
pub fn composite_oracle(
    relevance: &[f64],
    silhouette: &[f64],
    sizes: &[f64],
    weights: (f64, f64, f64),
) -> Vec<f64> {
    fn zscores(values: &[f64]) -> Vec<f64> {
        let n = values.len() as f64;
        let mean: f64 = values.iter().sum::<f64>() / n;
        let variance: f64 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = variance.sqrt();
        if sd == 0.0 {
            return vec![0.0; values.len()];
        }
        values.iter().map(|v| (v - mean) / sd).collect()
    }
    let zr = zscores(relevance);
    let zs = zscores(silhouette);
    let zn = zscores(sizes);
    (0..relevance.len())
        .map(|i| weights.0 * zr[i] + weights.1 * zs[i] + weights.2 * zn[i])
        .collect()
}
