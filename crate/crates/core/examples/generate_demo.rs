//! Regenerates the demo project under `configs/demo/`: a synthetic
//! 60-record corpus with planted relevance tiers, its journal-ranking
//! table, and a ready-to-run configuration using the mock embedder.
//!
//! Usage: `cargo run -p litscreen-core --example generate_demo -- <dir>`

use std::collections::BTreeMap;
use std::path::PathBuf;

use litscreen_core::config::{ClusteringSection, CorpusSection, OutputSection, PipelineConfig};
use litscreen_core::embed::ProviderConfig;
use litscreen_core::fixtures::relevance_fixture;
use litscreen_core::ingest::{CorpusFormat, FilterConfig};
use litscreen_core::numerics::GateThresholds;

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("configs/demo"));
    std::fs::create_dir_all(&dir).expect("create demo dir");

    let fixture = relevance_fixture(42);
    std::fs::write(dir.join("corpus.csv"), &fixture.corpus_csv).expect("write corpus");
    std::fs::write(dir.join("sjr.csv"), &fixture.sjr_csv).expect("write sjr");

    let mut embedding = ProviderConfig::mock(256, 90_210);
    embedding.cache_dir = Some(PathBuf::from("embed-cache"));
    let config = PipelineConfig {
        corpus: CorpusSection {
            path: PathBuf::from("corpus.csv"),
            format: CorpusFormat::ScopusCsv,
            sjr_path: Some(PathBuf::from("sjr.csv")),
            exclusions_path: None,
        },
        filters: FilterConfig::default(),
        statements: fixture.statements.clone(),
        embedding,
        paraphrase: None,
        gate: GateThresholds::default(),
        clustering: ClusteringSection {
            seed: 3,
            ..ClusteringSection::default()
        },
        output: OutputSection {
            dir: PathBuf::from("out"),
        },
        metadata: BTreeMap::from([(
            "note".to_string(),
            "synthetic demo corpus with 20 planted high-relevance records".to_string(),
        )]),
    };
    std::fs::write(
        dir.join("run.toml"),
        toml::to_string_pretty(&config).expect("serialize config"),
    )
    .expect("write config");

    println!("demo written to {}", dir.display());
    println!(
        "run it with: litscreen run --config {}/run.toml",
        dir.display()
    );
}
