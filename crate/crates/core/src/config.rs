//! Run configuration: TOML schema, validation, path resolution, and the
//! config hash that stamps every report.
//!
//! The hash is the SHA-256 of the parsed config serialized as canonical JSON
//! (sorted keys), taken before relative paths are resolved and before any
//! command-line overrides, so semantically equal files hash equally no
//! matter how their keys are ordered.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cluster::{ClusteringParams, CompositeWeights, Method};
use crate::embed::{ProviderConfig, ProviderKind};
use crate::ingest::{CorpusFormat, FilterConfig};
use crate::numerics::GateThresholds;
use crate::statements::{load_statements, Statement, DEFAULT_PARAPHRASE_PROMPT};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: CorpusSection,
    #[serde(default)]
    pub filters: FilterConfig,
    pub statements: Vec<Statement>,
    pub embedding: ProviderConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paraphrase: Option<ParaphraseSection>,
    #[serde(default)]
    pub gate: GateThresholds,
    #[serde(default)]
    pub clustering: ClusteringSection,
    pub output: OutputSection,
    /// Free-form provenance (for example the original search query).
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: CorpusFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sjr_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclusions_path: Option<PathBuf>,
}

fn default_format() -> CorpusFormat {
    CorpusFormat::ScopusCsv
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusteringSection {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub weights: CompositeWeights,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: ClusteringParams,
}

fn default_k() -> usize {
    3
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

impl Default for ClusteringSection {
    fn default() -> Self {
        ClusteringSection {
            k: default_k(),
            weights: CompositeWeights::default(),
            methods: default_methods(),
            seed: 0,
            params: ClusteringParams::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

/// Optional remote bootstrap that generates paraphrase variants; results are
/// meant to be pasted back into the config ("frozen paraphrases").
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParaphraseSection {
    pub endpoint: String,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default = "default_prompt")]
    pub prompt: String,
    #[serde(default = "default_paraphrase_count")]
    pub count: usize,
}

fn default_prompt() -> String {
    DEFAULT_PARAPHRASE_PROMPT.to_string()
}

fn default_paraphrase_count() -> usize {
    5
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("missing input file: {path}")]
    MissingFile { path: PathBuf },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// A parsed config together with its identity hash.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    pub hash: String,
}

/// Reads, parses, and hashes a config file. Relative paths are resolved
/// against the config file's directory; the hash is computed before
/// resolution.
pub fn load_config(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut config: PipelineConfig = toml::from_str(&raw)?;
    let hash = config_hash(&config);
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    config.resolve_paths(base);
    Ok(LoadedConfig { config, hash })
}

/// SHA-256 of the canonical JSON form (sorted object keys).
pub fn config_hash(config: &PipelineConfig) -> String {
    let value = serde_json::to_value(config).expect("config serializes");
    let canonical = serde_json::to_string(&value).expect("canonical JSON");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    hex::encode(hasher.finalize())
}

impl PipelineConfig {
    /// Rebases every relative path onto `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut self.corpus.path);
        if let Some(p) = self.corpus.sjr_path.as_mut() {
            rebase(p);
        }
        if let Some(p) = self.corpus.exclusions_path.as_mut() {
            rebase(p);
        }
        rebase(&mut self.output.dir);
        if let Some(dir) = self.embedding.cache_dir.as_mut() {
            rebase(dir);
        }
    }

    /// Structural validation plus input-path existence checks.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.filters
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        load_statements(&self.statements).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.embedding
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.gate
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.clustering.k < 2 {
            return Err(ConfigError::Invalid(format!(
                "clustering.k must be >= 2, got {}",
                self.clustering.k
            )));
        }
        self.clustering
            .weights
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.clustering.methods.is_empty() {
            return Err(ConfigError::Invalid(
                "clustering.methods must not be empty".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for method in &self.clustering.methods {
            if !seen.insert(method.as_str()) {
                return Err(ConfigError::Invalid(format!(
                    "clustering.methods lists {method} twice"
                )));
            }
        }

        if !self.corpus.path.is_file() {
            return Err(ConfigError::MissingFile {
                path: self.corpus.path.clone(),
            });
        }
        for path in [&self.corpus.sjr_path, &self.corpus.exclusions_path]
            .into_iter()
            .flatten()
        {
            if !path.is_file() {
                return Err(ConfigError::MissingFile { path: path.clone() });
            }
        }
        Ok(())
    }

    /// Command-line overrides; these never change the config hash.
    pub fn apply_overrides(
        &mut self,
        seed: Option<u64>,
        embedder: Option<ProviderKind>,
        out: Option<PathBuf>,
    ) {
        if let Some(seed) = seed {
            self.clustering.seed = seed;
        }
        if let Some(kind) = embedder {
            self.embedding.kind = kind;
        }
        if let Some(dir) = out {
            self.output.dir = dir;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const MINIMAL: &str = r#"
[corpus]
path = "corpus.csv"

[[statements]]
label = "focus"
text = "The study focuses on the topic of interest"

[embedding]
kind = "mock"
dimension = 32
seed = 5

[output]
dir = "out"
"#;

    fn write_config(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("run.toml");
        let mut file = std::fs::File::create(&path).unwrap();
        file.write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), MINIMAL);
        let loaded = load_config(&path).unwrap();
        let cfg = loaded.config;
        assert_eq!(cfg.filters.min_year, 2011);
        assert_eq!(cfg.clustering.k, 3);
        assert_eq!(cfg.clustering.methods, Method::ALL.to_vec());
        assert_eq!(cfg.gate.variance_target, 0.99);
        assert_eq!(cfg.clustering.weights.relevance, 0.5);
        assert_eq!(cfg.embedding.batch_size, 64);
        // Paths are rebased onto the config directory.
        assert!(cfg.corpus.path.starts_with(dir.path()));
        assert!(cfg.output.dir.starts_with(dir.path()));
    }

    #[test]
    fn hash_is_stable_under_key_reordering() {
        let dir = tempfile::tempdir().unwrap();
        let reordered = r#"
[output]
dir = "out"

[embedding]
seed = 5
dimension = 32
kind = "mock"

[[statements]]
text = "The study focuses on the topic of interest"
label = "focus"

[corpus]
path = "corpus.csv"
"#;
        let a = load_config(&write_config(dir.path(), MINIMAL)).unwrap();
        let sub = dir.path().join("sub");
        std::fs::create_dir(&sub).unwrap();
        let b = load_config(&write_config(&sub, reordered)).unwrap();
        assert_eq!(a.hash, b.hash);
    }

    #[test]
    fn hash_changes_with_content() {
        let dir = tempfile::tempdir().unwrap();
        let a = load_config(&write_config(dir.path(), MINIMAL)).unwrap();
        let changed = MINIMAL.replace("dimension = 32", "dimension = 64");
        let sub = dir.path().join("sub");
        std::fs::create_dir(&sub).unwrap();
        let b = load_config(&write_config(&sub, &changed)).unwrap();
        assert_ne!(a.hash, b.hash);
    }

    #[test]
    fn overrides_do_not_change_hash_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let loaded = load_config(&write_config(dir.path(), MINIMAL)).unwrap();
        let mut cfg = loaded.config.clone();
        cfg.apply_overrides(Some(99), Some(ProviderKind::RemoteHttp), None);
        assert_eq!(cfg.clustering.seed, 99);
        assert_eq!(cfg.embedding.kind, ProviderKind::RemoteHttp);
        // The hash was taken at load time; recomputing after overrides would
        // differ, which is why the loader computes it first.
        assert_ne!(config_hash(&cfg), loaded.hash);
    }

    #[test]
    fn validate_requires_existing_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let loaded = load_config(&write_config(dir.path(), MINIMAL)).unwrap();
        let err = loaded.config.validate().unwrap_err();
        assert!(matches!(err, ConfigError::MissingFile { .. }));

        std::fs::write(dir.path().join("corpus.csv"), "Title\n").unwrap();
        assert!(loaded.config.validate().is_ok());
    }

    #[test]
    fn validate_rejects_bad_k_and_duplicate_methods() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("corpus.csv"), "Title\n").unwrap();
        let body = format!("{MINIMAL}\n[clustering]\nk = 1\n");
        let loaded = load_config(&write_config(dir.path(), &body)).unwrap();
        assert!(matches!(
            loaded.config.validate(),
            Err(ConfigError::Invalid(_))
        ));

        let body = format!("{MINIMAL}\n[clustering]\nmethods = [\"kmeans\", \"kmeans\"]\n");
        let loaded = load_config(&write_config(dir.path(), &body)).unwrap();
        assert!(matches!(
            loaded.config.validate(),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{MINIMAL}\ntypo_key = true\n");
        let path = write_config(dir.path(), &body);
        assert!(matches!(load_config(&path), Err(ConfigError::Parse(_))));
    }
}
