//! Cosine relevance scoring and column standardization.
//!
//! Produces the N x S matrix of similarities between paper embeddings and
//! statement embeddings, the per-paper mean relevance, and the z-scored
//! matrix that feeds the PCA/clustering stages. Mean relevance is always
//! computed on the raw cosines; the standardized matrix exists only for the
//! downstream geometry.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::statements::StatementBank;

/// Raw and standardized similarity scores for one corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelevanceMatrix {
    pub paper_ids: Vec<String>,
    pub statement_labels: Vec<String>,
    /// `raw[i][j]` is the cosine between paper `i` and statement `j`.
    pub raw: Vec<Vec<f64>>,
    /// Row means of `raw`.
    pub mean_relevance: Vec<f64>,
    /// Column-wise z-scored copy of `raw`, filled by [`RelevanceMatrix::standardize`].
    pub standardized: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Error)]
pub enum RelevanceError {
    #[error("zero-norm vector for paper {id:?}")]
    ZeroVector { id: String },
    #[error("vector dimensions disagree: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("statement bank has no embeddings")]
    NotEmbedded,
    #[error("column {index} ({label:?}) is (near-)constant and cannot discriminate")]
    DegenerateColumn { index: usize, label: String },
    #[error("need at least {needed} rows for standardization, got {got}")]
    TooFewRows { needed: usize, got: usize },
}

/// Cosine similarity, clamped to [-1, 1] against rounding.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, RelevanceError> {
    if u.len() != v.len() {
        return Err(RelevanceError::DimensionMismatch(u.len(), v.len()));
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    let nu = nu.sqrt();
    let nv = nv.sqrt();
    if nu < 1e-12 || nv < 1e-12 {
        return Err(RelevanceError::ZeroVector { id: String::new() });
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Builds the full relevance matrix: one row per paper, one column per
/// statement, plus row means.
pub fn build_relevance_matrix(
    paper_ids: &[String],
    paper_vectors: &[Vec<f64>],
    bank: &StatementBank,
) -> Result<RelevanceMatrix, RelevanceError> {
    if !bank.is_embedded() {
        return Err(RelevanceError::NotEmbedded);
    }
    assert_eq!(
        paper_ids.len(),
        paper_vectors.len(),
        "one id per paper vector"
    );

    let mut raw = Vec::with_capacity(paper_vectors.len());
    let mut mean_relevance = Vec::with_capacity(paper_vectors.len());
    for (id, vector) in paper_ids.iter().zip(paper_vectors) {
        let mut row = Vec::with_capacity(bank.embeddings.len());
        for statement_vector in &bank.embeddings {
            let score = cosine(vector, statement_vector).map_err(|e| match e {
                RelevanceError::ZeroVector { .. } => RelevanceError::ZeroVector { id: id.clone() },
                other => other,
            })?;
            row.push(score);
        }
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        raw.push(row);
        mean_relevance.push(mean);
    }

    Ok(RelevanceMatrix {
        paper_ids: paper_ids.to_vec(),
        statement_labels: bank.labels(),
        raw,
        mean_relevance,
        standardized: None,
    })
}

/// Z-scores each column to zero mean and unit population variance
/// (N-divisor).
pub fn zscore_columns(raw: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, RelevanceError> {
    zscore_columns_labeled(raw, &[])
}

fn zscore_columns_labeled(
    raw: &[Vec<f64>],
    labels: &[String],
) -> Result<Vec<Vec<f64>>, RelevanceError> {
    let n = raw.len();
    if n < 3 {
        return Err(RelevanceError::TooFewRows { needed: 3, got: n });
    }
    let cols = raw[0].len();
    let nf = n as f64;

    let mut out = vec![vec![0.0; cols]; n];
    for j in 0..cols {
        let mean = raw.iter().map(|row| row[j]).sum::<f64>() / nf;
        let var = raw
            .iter()
            .map(|row| {
                let d = row[j] - mean;
                d * d
            })
            .sum::<f64>()
            / nf;
        let sd = var.sqrt();
        if sd < 1e-12 {
            return Err(RelevanceError::DegenerateColumn {
                index: j,
                label: labels.get(j).cloned().unwrap_or_default(),
            });
        }
        for (i, row) in raw.iter().enumerate() {
            out[i][j] = (row[j] - mean) / sd;
        }
    }
    Ok(out)
}

impl RelevanceMatrix {
    pub fn num_papers(&self) -> usize {
        self.paper_ids.len()
    }

    pub fn num_statements(&self) -> usize {
        self.statement_labels.len()
    }

    /// Fills `standardized` from `raw`.
    pub fn standardize(&mut self) -> Result<(), RelevanceError> {
        self.standardized = Some(zscore_columns_labeled(&self.raw, &self.statement_labels)?);
        Ok(())
    }

    /// Renders `relevance.csv`: id, one column per statement, mean_relevance.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["id".to_string()];
        header.extend(self.statement_labels.iter().cloned());
        header.push("mean_relevance".to_string());
        writer.write_record(&header).expect("in-memory write");
        for (i, id) in self.paper_ids.iter().enumerate() {
            let mut row = vec![id.clone()];
            row.extend(self.raw[i].iter().map(|v| v.to_string()));
            row.push(self.mean_relevance[i].to_string());
            writer.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf8")
    }
}
