//! Relevance statements and their representative embeddings.
//!
//! Each statement describes one inclusion criterion. The statement plus its
//! paraphrase variants are embedded individually and averaged into a single
//! representative vector, which reduces sensitivity to the exact wording.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{chat_with_retry, embed_batch, EmbedError, ProviderConfig, RemoteEndpoint};

/// One relevance criterion with its frozen paraphrase variants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub label: String,
    pub text: String,
    #[serde(default)]
    pub paraphrases: Vec<String>,
}

impl Statement {
    /// The texts that get embedded: the canonical statement first, then the
    /// paraphrases in config order.
    pub fn variants(&self) -> Vec<String> {
        let mut v = Vec::with_capacity(1 + self.paraphrases.len());
        v.push(self.text.clone());
        v.extend(self.paraphrases.iter().cloned());
        v
    }
}

/// The ordered set of statements; order defines the relevance-matrix columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatementBank {
    pub statements: Vec<Statement>,
    /// One unit vector per statement once [`StatementBank::embed_with`] has
    /// run; empty before that.
    pub embeddings: Vec<Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum StatementError {
    #[error("statement bank is empty")]
    EmptyBank,
    #[error("duplicate statement label {0:?}")]
    DuplicateLabel(String),
    #[error("statement {0:?} has empty text")]
    EmptyText(String),
    #[error("statement {label:?} repeats its canonical text as a paraphrase")]
    DuplicateParaphrase { label: String },
    #[error("variant vectors average to (near) zero; statements cannot be antipodal")]
    ZeroMeanVector,
    #[error("variant vector dimensions disagree: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("paraphrase count must be >= 1")]
    InvalidCount,
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Validates and assembles the bank from config entries, preserving order.
pub fn load_statements(entries: &[Statement]) -> Result<StatementBank, StatementError> {
    if entries.is_empty() {
        return Err(StatementError::EmptyBank);
    }
    let mut seen = std::collections::HashSet::new();
    for entry in entries {
        if entry.text.trim().is_empty() {
            return Err(StatementError::EmptyText(entry.label.clone()));
        }
        if !seen.insert(entry.label.as_str()) {
            return Err(StatementError::DuplicateLabel(entry.label.clone()));
        }
        if entry.paraphrases.iter().any(|p| p == &entry.text) {
            return Err(StatementError::DuplicateParaphrase {
                label: entry.label.clone(),
            });
        }
    }
    Ok(StatementBank {
        statements: entries.to_vec(),
        embeddings: Vec::new(),
    })
}

/// Coordinate-wise mean of the variant vectors, L2-normalized.
///
/// Cosine similarity is scale-invariant in each argument, so re-normalizing
/// does not change downstream scores; it regularizes storage and makes the
/// degenerate (antipodal) case detectable.
pub fn statement_embedding(variant_vectors: &[Vec<f64>]) -> Result<Vec<f64>, StatementError> {
    let first = variant_vectors
        .first()
        .ok_or(StatementError::ZeroMeanVector)?;
    let dim = first.len();
    for v in variant_vectors {
        if v.len() != dim {
            return Err(StatementError::DimensionMismatch(dim, v.len()));
        }
    }
    let count = variant_vectors.len() as f64;
    let mut mean = vec![0.0f64; dim];
    for v in variant_vectors {
        for (slot, x) in mean.iter_mut().zip(v) {
            *slot += x;
        }
    }
    for slot in mean.iter_mut() {
        *slot /= count;
    }
    let norm = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(StatementError::ZeroMeanVector);
    }
    for slot in mean.iter_mut() {
        *slot /= norm;
    }
    Ok(mean)
}

impl StatementBank {
    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn is_embedded(&self) -> bool {
        self.embeddings.len() == self.statements.len() && !self.statements.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.statements.iter().map(|s| s.label.clone()).collect()
    }

    /// Embeds every variant of every statement in one batch and stores the
    /// per-statement representative vectors.
    pub fn embed_with(&mut self, provider: &ProviderConfig) -> Result<(), StatementError> {
        let mut texts = Vec::new();
        let mut spans = Vec::with_capacity(self.statements.len());
        for statement in &self.statements {
            let variants = statement.variants();
            spans.push((texts.len(), variants.len()));
            texts.extend(variants);
        }
        let vectors = embed_batch(&texts, provider)?;
        let mut embeddings = Vec::with_capacity(self.statements.len());
        for (start, len) in spans {
            embeddings.push(statement_embedding(&vectors[start..start + len])?);
        }
        self.embeddings = embeddings;
        Ok(())
    }
}

/// Default instruction for the paraphrase bootstrap; `{n}` and `{statement}`
/// are substituted.
pub const DEFAULT_PARAPHRASE_PROMPT: &str = "Paraphrase the following research-criterion sentence; preserve meaning; output {n} numbered variants.\n\nSentence: {statement}";

/// Requests `n` close paraphrases of a statement from a chat-completion
/// endpoint. The caller is expected to persist the result into the config so
/// later runs never depend on the remote service.
pub fn fetch_paraphrases(
    statement: &Statement,
    n: usize,
    generator: &RemoteEndpoint,
    prompt_template: &str,
    max_retries: u32,
    retry_base_ms: u64,
) -> Result<Vec<String>, StatementError> {
    if n == 0 {
        return Err(StatementError::InvalidCount);
    }
    let prompt = prompt_template
        .replace("{n}", &n.to_string())
        .replace("{statement}", &statement.text);
    let content = chat_with_retry(generator, &prompt, max_retries, retry_base_ms)?;
    let paraphrases = parse_numbered_list(&content, n).ok_or_else(|| {
        StatementError::Embed(EmbedError::MalformedResponse(format!(
            "expected {n} numbered paraphrases, got: {content:?}"
        )))
    })?;
    Ok(paraphrases)
}

/// Extracts the first `n` numbered or bulleted lines. When the response
/// carries no list markers at all, every non-empty line counts.
fn parse_numbered_list(content: &str, n: usize) -> Option<Vec<String>> {
    fn strip_marker(line: &str) -> Option<&str> {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix(['-', '*']) {
            return Some(rest.trim());
        }
        let digits = trimmed.chars().take_while(|c| c.is_ascii_digit()).count();
        if digits == 0 {
            return None;
        }
        let rest = trimmed[digits..].trim_start_matches(['.', ')', ':']).trim();
        Some(rest)
    }

    let marked: Vec<String> = content
        .lines()
        .filter_map(strip_marker)
        .filter(|item| !item.is_empty())
        .map(str::to_string)
        .collect();
    let items = if marked.is_empty() {
        content
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect()
    } else {
        marked
    };
    if items.len() >= n {
        Some(items.into_iter().take(n).collect())
    } else {
        None
    }
}
