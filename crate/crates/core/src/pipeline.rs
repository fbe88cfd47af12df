//! End-to-end orchestration: ingest, relevance scoring, the PCA gate,
//! clustering, method selection, manual exclusions, and report emission.
//!
//! The run splits into two resumable halves. [`score`] covers everything
//! through the relevance matrix (the expensive, embedding-bound part) and
//! its [`ScoreState`] can be persisted as `state.json`; [`select`] replays
//! the statistical chain from that state. `run = score + select`, and both
//! paths produce byte-identical artifacts for identical config and seed.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{
    composite_select, evaluate_outcome, run_method, ClusterError, ClusteringOutcome, Method,
    MethodMetrics,
};
use crate::config::PipelineConfig;
use crate::embed::{compose_paper_text, embed_batch, EmbedError};
use crate::ingest::{
    apply_exclusion_list, apply_filters, dedup, join_sjr, parse_corpus, parse_exclusions,
    parse_sjr, FilterOutcome, IngestError, PaperRecord, ParseStats,
};
use crate::numerics::{
    condition_number_with, correlation_matrix, kmo, pca_fit, pca_gate, pca_transform, NumericsError,
};
use crate::relevance::{build_relevance_matrix, zscore_columns, RelevanceError, RelevanceMatrix};
use crate::statements::{load_statements, StatementError};

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Statement(#[from] StatementError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Relevance(#[from] RelevanceError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error("corpus is empty at this stage")]
    EmptyCorpus,
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    State(String),
    #[error("output directory is locked by another run: {path}")]
    Locked { path: PathBuf },
    #[error("serialization failure: {0}")]
    Json(#[from] serde_json::Error),
}

/// Any pipeline failure, tagged with the stage it occurred in.
#[derive(Debug, Error)]
#[error("stage {stage}: {source}")]
pub struct PipelineError {
    pub stage: &'static str,
    #[source]
    pub source: StageError,
}

fn stage_err(stage: &'static str, source: impl Into<StageError>) -> PipelineError {
    PipelineError {
        stage,
        source: source.into(),
    }
}

fn read_file(stage: &'static str, path: &Path) -> Result<Vec<u8>, PipelineError> {
    fs::read(path).map_err(|source| {
        stage_err(
            stage,
            StageError::Io {
                path: path.to_path_buf(),
                source,
            },
        )
    })
}

/// One row of the phase accounting: how many records survived a phase and
/// why the rest were removed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCount {
    pub name: String,
    pub kept: usize,
    pub removed: BTreeMap<String, usize>,
}

impl PhaseCount {
    fn new(name: &str, kept: usize, removed: BTreeMap<String, usize>) -> Self {
        PhaseCount {
            name: name.to_string(),
            kept,
            removed,
        }
    }

    pub fn removed_total(&self) -> usize {
        self.removed.values().sum()
    }
}

fn outcome_phase(name: &str, outcome: &FilterOutcome) -> PhaseCount {
    PhaseCount::new(name, outcome.kept.len(), outcome.removed_by_reason())
}

/// Everything the selection half needs, produced by [`score`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreState {
    pub version: u32,
    pub config_hash: String,
    pub parse_stats: ParseStats,
    pub phases: Vec<PhaseCount>,
    /// Records surviving the metadata filters, in corpus order.
    pub records: Vec<PaperRecord>,
    pub relevance: RelevanceMatrix,
}

/// Gate and PCA numbers for the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub kmo: f64,
    #[serde(with = "float_or_inf")]
    pub cn: f64,
    pub pca_applied: bool,
    /// Retained component count from the fit.
    pub components: usize,
    pub explained_ratio: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub metrics: MethodMetrics,
    /// Mean silhouette over the full partition (diagnostic only).
    pub silhouette_full: f64,
    pub composite: f64,
    pub high_cluster: usize,
    pub high_cluster_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedRecord {
    pub id: String,
    pub title: String,
    pub year: Option<i32>,
    pub source_title: String,
    pub quartile: String,
    pub mean_relevance: f64,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderMeta {
    pub kind: String,
    pub model: String,
    pub dimension: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub config_hash: String,
    pub seed: u64,
    pub provider: ProviderMeta,
}

/// The full run summary; `report.json` is exactly this structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub run: RunMeta,
    pub phases: Vec<PhaseCount>,
    pub parse_stats: ParseStats,
    pub diagnostics: Diagnostics,
    pub methods: Vec<MethodReport>,
    pub winner: Method,
    pub selected_ids: Vec<String>,
    pub selected: Vec<SelectedRecord>,
    pub exclusion_warnings: Vec<String>,
    pub year_histogram: BTreeMap<String, usize>,
    pub quartile_histogram: BTreeMap<String, usize>,
}

mod float_or_inf {
    //! JSON has no infinity literal; an infinite condition number is encoded
    //! as the string "inf".

    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            serializer.serialize_f64(*value)
        } else {
            serializer.serialize_str("inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(x) => Ok(x),
            Raw::Text(s) if s == "inf" => Ok(f64::INFINITY),
            Raw::Text(other) => Err(D::Error::custom(format!(
                "expected a number or \"inf\", got {other:?}"
            ))),
        }
    }
}

/// Phases 1-2 plus embedding and relevance scoring.
pub fn score(cfg: &PipelineConfig, config_hash: &str) -> Result<ScoreState, PipelineError> {
    let raw = read_file("parse", &cfg.corpus.path)?;
    let parsed = parse_corpus(&raw, cfg.corpus.format).map_err(|e| stage_err("parse", e))?;
    let mut phases = Vec::new();
    let mut parse_removed = BTreeMap::new();
    if parsed.stats.skipped_malformed > 0 {
        parse_removed.insert("MalformedRow".to_string(), parsed.stats.skipped_malformed);
    }
    if parsed.stats.skipped_empty_title > 0 {
        parse_removed.insert("EmptyTitle".to_string(), parsed.stats.skipped_empty_title);
    }
    phases.push(PhaseCount::new(
        "parse",
        parsed.records.len(),
        parse_removed,
    ));
    log::info!(
        "parse: {} records from {} rows",
        parsed.records.len(),
        parsed.stats.data_rows
    );

    let deduped = dedup(parsed.records);
    phases.push(outcome_phase("dedup", &deduped));
    log::info!(
        "dedup: kept {}, removed {}",
        deduped.kept.len(),
        deduped.removed.len()
    );

    let records = match &cfg.corpus.sjr_path {
        Some(path) => {
            let table =
                parse_sjr(&read_file("sjr_join", path)?).map_err(|e| stage_err("sjr_join", e))?;
            log::info!("sjr_join: {} ranking entries", table.len());
            join_sjr(deduped.kept, &table)
        }
        None => deduped.kept,
    };

    cfg.filters
        .validate()
        .map_err(|e| stage_err("filters", e))?;
    let filtered = apply_filters(records, &cfg.filters);
    phases.push(outcome_phase("metadata_filters", &filtered));
    log::info!(
        "metadata_filters: kept {}, removed {}",
        filtered.kept.len(),
        filtered.removed.len()
    );
    let records = filtered.kept;

    let mut bank = load_statements(&cfg.statements).map_err(|e| stage_err("statements", e))?;
    bank.embed_with(&cfg.embedding)
        .map_err(|e| stage_err("statements", e))?;

    if records.is_empty() {
        return Err(stage_err("relevance", StageError::EmptyCorpus));
    }

    let texts: Vec<String> = records.iter().map(compose_paper_text).collect();
    let vectors = embed_batch(&texts, &cfg.embedding).map_err(|e| stage_err("embed", e))?;
    log::info!(
        "embed: {} paper vectors of dimension {}",
        vectors.len(),
        cfg.embedding.dimension
    );

    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let relevance =
        build_relevance_matrix(&ids, &vectors, &bank).map_err(|e| stage_err("relevance", e))?;

    Ok(ScoreState {
        version: 1,
        config_hash: config_hash.to_string(),
        parse_stats: parsed.stats,
        phases,
        records,
        relevance,
    })
}

/// The statistical chain from a scored state to the final report:
/// z-scoring, the KMO/CN gate, PCA, clustering, composite selection, and the
/// manual exclusion list.
pub fn select(cfg: &PipelineConfig, state: &ScoreState) -> Result<PipelineReport, PipelineError> {
    let standardized = zscore_columns(&state.relevance.raw).map_err(|e| stage_err("zscore", e))?;

    let correlation = correlation_matrix(&standardized);
    let kmo_value = kmo(&correlation).map_err(|e| stage_err("gate", e))?;
    let cn_value = condition_number_with(&standardized, cfg.gate.cn_convention);
    cfg.gate.validate().map_err(|e| stage_err("gate", e))?;
    let applied = pca_gate(kmo_value, cn_value, &cfg.gate);
    log::info!("gate: kmo={kmo_value:.4} cn={cn_value:.2} pca_applied={applied}");

    let mut model = pca_fit(&standardized, &cfg.gate).map_err(|e| stage_err("pca", e))?;
    model.applied = applied;
    let projected = pca_transform(&standardized, &model).map_err(|e| stage_err("pca", e))?;
    log::info!(
        "pca: retained {} of {} components",
        model.retained,
        model.eigenvalues.len()
    );

    let k = cfg.clustering.k;
    let seed = cfg.clustering.seed;
    let mut outcomes: Vec<ClusteringOutcome> = Vec::with_capacity(cfg.clustering.methods.len());
    for &method in &cfg.clustering.methods {
        let labels = run_method(method, &projected, k, seed, &cfg.clustering.params)
            .map_err(|e| stage_err("clustering", e))?;
        let outcome = evaluate_outcome(
            method,
            &projected,
            labels,
            k,
            &state.relevance.mean_relevance,
            seed,
        )
        .map_err(|e| stage_err("clustering", e))?;
        log::info!(
            "clustering/{}: high cluster {} of size {} (mean relevance {:.4})",
            method,
            outcome.high_cluster,
            outcome.metrics.size_high,
            outcome.metrics.mean_relevance_high
        );
        outcomes.push(outcome);
    }

    let entries: Vec<(Method, MethodMetrics)> =
        outcomes.iter().map(|o| (o.method, o.metrics)).collect();
    let selection = composite_select(&entries, &cfg.clustering.weights)
        .map_err(|e| stage_err("composite", e))?;
    let winner = &outcomes[selection.winner_index];
    log::info!("composite: winner {}", winner.method);

    let mut phases = state.phases.clone();
    phases.push(PhaseCount::new(
        "algorithmic_selection",
        winner.metrics.size_high,
        non_selected_breakdown(winner, k, &state.relevance.mean_relevance),
    ));

    let mut selected: Vec<PaperRecord> = Vec::with_capacity(winner.metrics.size_high);
    let mut relevance_by_id: BTreeMap<&str, f64> = BTreeMap::new();
    for (index, record) in state.records.iter().enumerate() {
        relevance_by_id.insert(record.id.as_str(), state.relevance.mean_relevance[index]);
        if winner.labels[index] == winner.high_cluster {
            selected.push(record.clone());
        }
    }

    let exclusions = match &cfg.corpus.exclusions_path {
        Some(path) => parse_exclusions(&read_file("exclusions", path)?)
            .map_err(|e| stage_err("exclusions", e))?,
        None => Vec::new(),
    };
    let (final_outcome, exclusion_warnings) = apply_exclusion_list(selected, &exclusions);
    phases.push(outcome_phase("manual_exclusion", &final_outcome));
    log::info!(
        "manual_exclusion: kept {}, removed {}",
        final_outcome.kept.len(),
        final_outcome.removed.len()
    );

    let mut year_histogram: BTreeMap<String, usize> = BTreeMap::new();
    let mut quartile_histogram: BTreeMap<String, usize> = BTreeMap::new();
    let mut selected_rows = Vec::with_capacity(final_outcome.kept.len());
    let mut selected_ids = Vec::with_capacity(final_outcome.kept.len());
    for record in &final_outcome.kept {
        let year_key = record
            .year
            .map(|y| y.to_string())
            .unwrap_or_else(|| "unknown".to_string());
        *year_histogram.entry(year_key).or_insert(0) += 1;
        *quartile_histogram
            .entry(record.quartile.as_str().to_string())
            .or_insert(0) += 1;
        selected_ids.push(record.id.clone());
        selected_rows.push(SelectedRecord {
            id: record.id.clone(),
            title: record.title.clone(),
            year: record.year,
            source_title: record.source_title.clone(),
            quartile: record.quartile.as_str().to_string(),
            mean_relevance: relevance_by_id[record.id.as_str()],
            cluster: winner.high_cluster,
        });
    }

    let methods = outcomes
        .iter()
        .zip(&selection.composites)
        .map(|(outcome, &composite)| MethodReport {
            method: outcome.method,
            metrics: outcome.metrics,
            silhouette_full: outcome.silhouette_full,
            composite,
            high_cluster: outcome.high_cluster,
            high_cluster_size: outcome.metrics.size_high,
        })
        .collect();

    Ok(PipelineReport {
        run: RunMeta {
            config_hash: state.config_hash.clone(),
            seed,
            provider: ProviderMeta {
                kind: cfg.embedding.kind.as_str().to_string(),
                model: cfg.embedding.model.clone(),
                dimension: cfg.embedding.dimension,
                seed: cfg.embedding.seed,
            },
        },
        phases,
        parse_stats: state.parse_stats.clone(),
        diagnostics: Diagnostics {
            kmo: kmo_value,
            cn: cn_value,
            pca_applied: applied,
            components: model.retained,
            explained_ratio: model.explained_ratio.clone(),
        },
        methods,
        winner: selection.winner,
        selected_ids,
        selected: selected_rows,
        exclusion_warnings,
        year_histogram,
        quartile_histogram,
    })
}

/// Removal breakdown for the algorithmic phase. With three clusters the two
/// rejected ones are named by relevance rank; otherwise they are lumped.
fn non_selected_breakdown(
    winner: &ClusteringOutcome,
    k: usize,
    mean_relevance: &[f64],
) -> BTreeMap<String, usize> {
    let mut sums = vec![0.0f64; k];
    let mut counts = vec![0usize; k];
    for (&label, &relevance) in winner.labels.iter().zip(mean_relevance) {
        sums[label] += relevance;
        counts[label] += 1;
    }

    let mut removed = BTreeMap::new();
    if k == 3 {
        let mut others: Vec<usize> = (0..k).filter(|&c| c != winner.high_cluster).collect();
        others.sort_by(|&a, &b| {
            let mean = |c: usize| {
                if counts[c] == 0 {
                    f64::NEG_INFINITY
                } else {
                    sums[c] / counts[c] as f64
                }
            };
            mean(b)
                .partial_cmp(&mean(a))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        if counts[others[0]] > 0 {
            removed.insert("MediumRelevance".to_string(), counts[others[0]]);
        }
        if counts[others[1]] > 0 {
            removed.insert("LowRelevance".to_string(), counts[others[1]]);
        }
    } else {
        let total: usize = (0..k)
            .filter(|&c| c != winner.high_cluster)
            .map(|c| counts[c])
            .sum();
        if total > 0 {
            removed.insert("NotHighRelevance".to_string(), total);
        }
    }
    removed
}

/// Full pipeline: [`score`] then [`select`].
pub fn run(
    cfg: &PipelineConfig,
    config_hash: &str,
) -> Result<(ScoreState, PipelineReport), PipelineError> {
    let state = score(cfg, config_hash)?;
    let report = select(cfg, &state)?;
    Ok((state, report))
}

const STATE_FILE: &str = "state.json";

fn write_bytes(stage: &'static str, path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| {
            stage_err(
                stage,
                StageError::Io {
                    path: parent.to_path_buf(),
                    source,
                },
            )
        })?;
    }
    fs::write(path, bytes).map_err(|source| {
        stage_err(
            stage,
            StageError::Io {
                path: path.to_path_buf(),
                source,
            },
        )
    })
}

/// Persists the score state as `state.json`, plus `relevance.csv`.
pub fn save_state(state: &ScoreState, dir: &Path) -> Result<(), PipelineError> {
    let json = serde_json::to_vec(state).map_err(|e| stage_err("state", e))?;
    write_bytes("state", &dir.join(STATE_FILE), &json)?;
    write_bytes(
        "state",
        &dir.join("relevance.csv"),
        state.relevance.to_csv().as_bytes(),
    )
}

/// Loads `state.json` back; `select` resumes from here.
pub fn load_state(dir: &Path) -> Result<ScoreState, PipelineError> {
    let path = dir.join(STATE_FILE);
    let raw = read_file("state", &path)?;
    let state: ScoreState = serde_json::from_slice(&raw).map_err(|e| stage_err("state", e))?;
    if state.version != 1 {
        return Err(stage_err(
            "state",
            StageError::State(format!("unsupported state version {}", state.version)),
        ));
    }
    Ok(state)
}

/// Renders the report to JSON bytes (this exact byte sequence is written to
/// `report.json`).
pub fn report_json(report: &PipelineReport) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(report).expect("report serializes");
    bytes.push(b'\n');
    bytes
}

pub fn load_report(path: &Path) -> Result<PipelineReport, PipelineError> {
    let raw = read_file("report", path)?;
    serde_json::from_slice(&raw).map_err(|e| stage_err("report", e))
}

/// Writes `report.json`, `selected.csv`, `phase_counts.csv`,
/// `year_histogram.csv`, and `extraction_template.csv` into `dir`.
pub fn emit_report(report: &PipelineReport, dir: &Path) -> Result<(), PipelineError> {
    write_bytes("report", &dir.join("report.json"), &report_json(report))?;

    let mut selected = csv::Writer::from_writer(Vec::new());
    selected
        .write_record([
            "id",
            "title",
            "year",
            "source_title",
            "quartile",
            "mean_relevance",
            "cluster",
        ])
        .expect("in-memory write");
    for row in &report.selected {
        selected
            .write_record([
                row.id.as_str(),
                row.title.as_str(),
                &row.year.map(|y| y.to_string()).unwrap_or_default(),
                row.source_title.as_str(),
                row.quartile.as_str(),
                &row.mean_relevance.to_string(),
                &row.cluster.to_string(),
            ])
            .expect("in-memory write");
    }
    write_bytes(
        "report",
        &dir.join("selected.csv"),
        &selected.into_inner().expect("flush"),
    )?;

    let mut phases = csv::Writer::from_writer(Vec::new());
    phases
        .write_record(["phase", "kept", "reason", "removed"])
        .expect("in-memory write");
    for phase in &report.phases {
        if phase.removed.is_empty() {
            phases
                .write_record([phase.name.as_str(), &phase.kept.to_string(), "", "0"])
                .expect("in-memory write");
        } else {
            for (reason, count) in &phase.removed {
                phases
                    .write_record([
                        phase.name.as_str(),
                        &phase.kept.to_string(),
                        reason.as_str(),
                        &count.to_string(),
                    ])
                    .expect("in-memory write");
            }
        }
    }
    write_bytes(
        "report",
        &dir.join("phase_counts.csv"),
        &phases.into_inner().expect("flush"),
    )?;

    let mut years = csv::Writer::from_writer(Vec::new());
    years
        .write_record(["year", "count"])
        .expect("in-memory write");
    for (year, count) in &report.year_histogram {
        years
            .write_record([year.as_str(), &count.to_string()])
            .expect("in-memory write");
    }
    write_bytes(
        "report",
        &dir.join("year_histogram.csv"),
        &years.into_inner().expect("flush"),
    )?;

    let mut template = csv::Writer::from_writer(Vec::new());
    template
        .write_record(["Paper", "Label", "Purpose", "Method", "Narrative"])
        .expect("in-memory write");
    for row in &report.selected {
        template
            .write_record([row.title.as_str(), "", "", "", ""])
            .expect("in-memory write");
    }
    write_bytes(
        "report",
        &dir.join("extraction_template.csv"),
        &template.into_inner().expect("flush"),
    )?;

    Ok(())
}

/// Exclusive ownership of an output directory for the duration of a run.
/// Dropping the lock releases it.
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> Result<OutputLock, PipelineError> {
        fs::create_dir_all(dir).map_err(|source| {
            stage_err(
                "lock",
                StageError::Io {
                    path: dir.to_path_buf(),
                    source,
                },
            )
        })?;
        let path = dir.join(".litscreen.lock");
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(mut file) => {
                let _ = writeln!(file, "pid {}", std::process::id());
                Ok(OutputLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(stage_err("lock", StageError::Locked { path }))
            }
            Err(source) => Err(stage_err("lock", StageError::Io { path, source })),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
