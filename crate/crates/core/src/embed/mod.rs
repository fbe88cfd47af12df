//! Text embedding: paper-text composition, provider dispatch, batching,
//! retries, and the on-disk cache.
//!
//! Two providers exist behind one call path: a remote OpenAI-compatible HTTP
//! service and a deterministic local mock. All vectors pass through f32
//! rounding so a cached run and a fresh run are bit-identical.

mod cache;
mod mock;
mod remote;

pub use mock::mock_embed;
pub use remote::RemoteEndpoint;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::PaperRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProviderKind {
    #[serde(rename = "remote")]
    RemoteHttp,
    #[serde(rename = "mock")]
    DeterministicMock,
}

impl ProviderKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProviderKind::RemoteHttp => "remote",
            ProviderKind::DeterministicMock => "mock",
        }
    }

    pub fn parse(s: &str) -> Option<ProviderKind> {
        match s.trim().to_ascii_lowercase().as_str() {
            "remote" => Some(ProviderKind::RemoteHttp),
            "mock" => Some(ProviderKind::DeterministicMock),
            _ => None,
        }
    }
}

/// Embedding provider settings for one pipeline run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    /// Remote only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// Base delay of the exponential backoff between retries.
    #[serde(default = "default_retry_base_ms")]
    pub retry_base_ms: u64,
    /// Mock only; folded into every token stream.
    #[serde(default)]
    pub seed: u64,
    /// Name of the environment variable holding the API key (remote only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    /// Header that carries the key; `Authorization` gets a Bearer prefix.
    #[serde(default = "default_auth_header")]
    pub auth_header: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

fn default_model() -> String {
    "mock".into()
}

fn default_dimension() -> usize {
    256
}

fn default_batch_size() -> usize {
    64
}

fn default_max_retries() -> u32 {
    5
}

fn default_retry_base_ms() -> u64 {
    500
}

fn default_auth_header() -> String {
    "Authorization".into()
}

impl ProviderConfig {
    pub fn mock(dimension: usize, seed: u64) -> Self {
        ProviderConfig {
            kind: ProviderKind::DeterministicMock,
            endpoint: None,
            model: format!("mock-{dimension}"),
            dimension,
            batch_size: 64,
            max_retries: 5,
            retry_base_ms: 500,
            seed,
            api_key_env: None,
            auth_header: "Authorization".into(),
            cache_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dimension < 2 {
            return Err(EmbedError::InvalidConfig(format!(
                "dimension must be >= 2, got {}",
                self.dimension
            )));
        }
        if self.batch_size < 1 {
            return Err(EmbedError::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.kind == ProviderKind::RemoteHttp && self.endpoint.is_none() {
            return Err(EmbedError::InvalidConfig(
                "remote provider requires an endpoint".into(),
            ));
        }
        Ok(())
    }

    fn remote_endpoint(&self) -> Result<RemoteEndpoint, EmbedError> {
        let url = self.endpoint.clone().ok_or_else(|| {
            EmbedError::InvalidConfig("remote provider requires an endpoint".into())
        })?;
        let api_key = match &self.api_key_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| EmbedError::MissingApiKey { var: var.clone() })?,
            ),
            None => None,
        };
        Ok(RemoteEndpoint {
            url,
            model: self.model.clone(),
            api_key,
            auth_header: self.auth_header.clone(),
            timeout_secs: 120,
        })
    }
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("invalid provider config: {0}")]
    InvalidConfig(String),
    #[error("no texts to embed")]
    EmptyInput,
    #[error("text at index {index} is empty")]
    EmptyText { index: usize },
    #[error("environment variable {var} with the API key is not set")]
    MissingApiKey { var: String },
    #[error("embedding service unavailable after {attempts} attempt(s): {message}")]
    RemoteUnavailable { attempts: u32, message: String },
    #[error("embedding service rejected the request (status {status}): {message}")]
    RemoteRejected { status: u16, message: String },
    #[error("malformed service response: {0}")]
    MalformedResponse(String),
    #[error("service returned dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cache I/O error: {0}")]
    Cache(#[from] std::io::Error),
}

/// Concatenates title, abstract, and keywords into the text that gets
/// embedded: `"<title>. <abstract>. Keywords: <k1>; <k2>"`, omitting empty
/// segments.
pub fn compose_paper_text(record: &PaperRecord) -> String {
    let mut segments: Vec<String> = Vec::with_capacity(3);
    let title = record.title.trim();
    if !title.is_empty() {
        segments.push(title.to_string());
    }
    let abstract_text = record.abstract_text.trim();
    if !abstract_text.is_empty() {
        segments.push(abstract_text.to_string());
    }
    if !record.keywords.is_empty() {
        segments.push(format!("Keywords: {}", record.keywords.join("; ")));
    }
    segments.join(". ")
}

/// Embeds a batch of texts, preserving order. Cached vectors are reused;
/// misses are chunked at `batch_size` and fetched with exponential backoff.
pub fn embed_batch(texts: &[String], cfg: &ProviderConfig) -> Result<Vec<Vec<f64>>, EmbedError> {
    cfg.validate()?;
    if texts.is_empty() {
        return Err(EmbedError::EmptyInput);
    }
    if let Some(index) = texts.iter().position(|t| t.trim().is_empty()) {
        return Err(EmbedError::EmptyText { index });
    }

    let mut results: Vec<Option<Vec<f64>>> = vec![None; texts.len()];
    let keys: Vec<String> = texts
        .iter()
        .map(|t| cache::cache_key(cfg.kind.as_str(), &cfg.model, cfg.dimension, cfg.seed, t))
        .collect();

    if let Some(dir) = &cfg.cache_dir {
        for (i, key) in keys.iter().enumerate() {
            results[i] = cache::read(dir, key, cfg.dimension);
        }
    }

    let missing: Vec<usize> = (0..texts.len()).filter(|&i| results[i].is_none()).collect();
    if !missing.is_empty() {
        let endpoint = match cfg.kind {
            ProviderKind::RemoteHttp => Some(cfg.remote_endpoint()?),
            ProviderKind::DeterministicMock => None,
        };

        for chunk in missing.chunks(cfg.batch_size) {
            let chunk_texts: Vec<String> = chunk.iter().map(|&i| texts[i].clone()).collect();
            let vectors = match &endpoint {
                None => chunk_texts
                    .iter()
                    .map(|t| mock_embed(t, cfg.seed, cfg.dimension))
                    .collect(),
                Some(endpoint) => fetch_with_retry(endpoint, &chunk_texts, cfg)?,
            };
            for (&i, vector) in chunk.iter().zip(vectors) {
                if vector.len() != cfg.dimension {
                    return Err(EmbedError::DimensionMismatch {
                        expected: cfg.dimension,
                        got: vector.len(),
                    });
                }
                if vector.iter().any(|v| !v.is_finite()) {
                    return Err(EmbedError::MalformedResponse(format!(
                        "non-finite embedding value for input {i}"
                    )));
                }
                let canonical: Vec<f64> = vector.iter().map(|&v| v as f32 as f64).collect();
                if let Some(dir) = &cfg.cache_dir {
                    cache::write(dir, &keys[i], &canonical)?;
                }
                results[i] = Some(canonical);
            }
        }
    }

    Ok(results.into_iter().map(|v| v.unwrap()).collect())
}

fn fetch_with_retry(
    endpoint: &RemoteEndpoint,
    texts: &[String],
    cfg: &ProviderConfig,
) -> Result<Vec<Vec<f64>>, EmbedError> {
    let mut last_message = String::new();
    let attempts = cfg.max_retries + 1;
    for attempt in 0..attempts {
        if attempt > 0 {
            let delay = cfg
                .retry_base_ms
                .saturating_mul(1u64 << (attempt - 1).min(16));
            std::thread::sleep(std::time::Duration::from_millis(delay));
        }
        match remote::embed_once(endpoint, texts) {
            Ok(vectors) => return Ok(vectors),
            Err(remote::RemoteFailure::Fatal(err)) => return Err(err),
            Err(remote::RemoteFailure::Transient(message)) => {
                log::warn!("embedding attempt {} failed: {message}", attempt + 1);
                last_message = message;
            }
        }
    }
    Err(EmbedError::RemoteUnavailable {
        attempts,
        message: last_message,
    })
}

/// One chat completion against a configured endpoint, with the same retry
/// policy as embeddings. Used by the paraphrase bootstrap.
pub fn chat_with_retry(
    endpoint: &RemoteEndpoint,
    prompt: &str,
    max_retries: u32,
    retry_base_ms: u64,
) -> Result<String, EmbedError> {
    let mut last_message = String::new();
    let attempts = max_retries + 1;
    for attempt in 0..attempts {
        if attempt > 0 {
            let delay = retry_base_ms.saturating_mul(1u64 << (attempt - 1).min(16));
            std::thread::sleep(std::time::Duration::from_millis(delay));
        }
        match remote::chat_once(endpoint, prompt) {
            Ok(content) => return Ok(content),
            Err(remote::RemoteFailure::Fatal(err)) => return Err(err),
            Err(remote::RemoteFailure::Transient(message)) => {
                log::warn!("chat attempt {} failed: {message}", attempt + 1);
                last_message = message;
            }
        }
    }
    Err(EmbedError::RemoteUnavailable {
        attempts,
        message: last_message,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Quartile;

    fn record(title: &str, abstract_text: &str, keywords: &[&str]) -> PaperRecord {
        PaperRecord {
            id: "10.1/x".into(),
            title: title.into(),
            abstract_text: abstract_text.into(),
            keywords: keywords.iter().map(|s| s.to_string()).collect(),
            year: Some(2020),
            language: "English".into(),
            doctype: "Article".into(),
            source_title: "J".into(),
            subject_areas: Vec::new(),
            quartile: Quartile::Unranked,
            url: None,
        }
    }

    #[test]
    fn compose_full_record() {
        let r = record("T", "A", &["k1", "k2"]);
        assert_eq!(compose_paper_text(&r), "T. A. Keywords: k1; k2");
    }

    #[test]
    fn compose_omits_empty_segments() {
        assert_eq!(compose_paper_text(&record("T", "", &[])), "T");
        assert_eq!(
            compose_paper_text(&record("T", "", &["k1"])),
            "T. Keywords: k1"
        );
        assert_eq!(compose_paper_text(&record("T", "A", &[])), "T. A");
    }

    #[test]
    fn mock_batch_is_deterministic_and_order_preserving() {
        let cfg = ProviderConfig::mock(16, 42);
        let texts = vec!["alpha".to_string(), "beta".to_string(), "alpha".to_string()];
        let out = embed_batch(&texts, &cfg).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0], out[2]);
        assert_ne!(out[0], out[1]);
        assert_eq!(out[0], mock_embed("alpha", 42, 16));

        let rerun = embed_batch(&texts, &cfg).unwrap();
        assert_eq!(out, rerun);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        let cfg = ProviderConfig::mock(8, 1);
        assert!(matches!(
            embed_batch(&[], &cfg),
            Err(EmbedError::EmptyInput)
        ));
        let texts = vec!["ok".to_string(), "  ".to_string()];
        assert!(matches!(
            embed_batch(&texts, &cfg),
            Err(EmbedError::EmptyText { index: 1 })
        ));
    }

    #[test]
    fn cache_round_trip_matches_fresh_run() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ProviderConfig::mock(32, 9);
        cfg.cache_dir = Some(dir.path().to_path_buf());
        let texts: Vec<String> = (0..5).map(|i| format!("document number {i}")).collect();

        let fresh = embed_batch(&texts, &cfg).unwrap();
        // Second call is served from the cache.
        let cached = embed_batch(&texts, &cfg).unwrap();
        assert_eq!(fresh, cached);

        // And matches a run without any cache at all.
        let mut no_cache = cfg.clone();
        no_cache.cache_dir = None;
        assert_eq!(fresh, embed_batch(&texts, &no_cache).unwrap());
    }

    #[test]
    fn batching_does_not_change_results() {
        let mut small = ProviderConfig::mock(16, 3);
        small.batch_size = 2;
        let big = ProviderConfig::mock(16, 3);
        let texts: Vec<String> = (0..7).map(|i| format!("text {i}")).collect();
        assert_eq!(
            embed_batch(&texts, &small).unwrap(),
            embed_batch(&texts, &big).unwrap()
        );
    }

    #[test]
    fn remote_without_endpoint_is_invalid() {
        let mut cfg = ProviderConfig::mock(8, 0);
        cfg.kind = ProviderKind::RemoteHttp;
        assert!(matches!(
            embed_batch(&["x".to_string()], &cfg),
            Err(EmbedError::InvalidConfig(_))
        ));
    }
}
