//! Statement-similarity screening for systematic literature reviews.
//!
//! The pipeline turns a bibliographic export into a selected high-relevance
//! corpus: parse and deduplicate records, join journal rankings, apply
//! metadata filters, score every paper against user-defined relevance
//! statements with text embeddings, z-score the similarity matrix, decide
//! via KMO and the condition number whether to apply PCA, cluster the papers
//! three ways, and pick the clustering whose high-relevance group wins a
//! weighted composite of mean relevance, silhouette, and size.
//!
//! Modules follow the stages:
//!
//! - [`ingest`]: corpus parsing, dedup, SJR join, metadata filters
//! - [`statements`]: relevance statements and their mean embeddings
//! - [`embed`]: embedding providers (remote HTTP or deterministic mock),
//!   batching, and the on-disk vector cache
//! - [`relevance`]: cosine scoring and column standardization
//! - [`numerics`]: KMO, condition number, the PCA gate, and PCA
//! - [`cluster`]: k-means, GMM, Ward agglomerative, silhouettes, and the
//!   composite method selection
//! - [`pipeline`]: orchestration, resumable state, and report emission
//! - [`config`]: the TOML run configuration
//! - [`fixtures`]: seeded synthetic corpora and blob generators
//! - [`rng`]: the SplitMix64/FNV-1a primitives everything draws from

pub mod cluster;
pub mod config;
pub mod embed;
pub mod fixtures;
pub mod ingest;
mod linalg;
pub mod numerics;
pub mod pipeline;
pub mod relevance;
pub mod rng;
pub mod statements;
