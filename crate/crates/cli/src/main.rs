//! `litscreen` - reproducible screening of bibliographic corpora.
//!
//! Exit codes: 0 success, 1 configuration/validation error, 2 runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use litscreen_core::config::{load_config, LoadedConfig, PipelineConfig};
use litscreen_core::embed::{ProviderKind, RemoteEndpoint};
use litscreen_core::pipeline::{
    emit_report, load_report, load_state, run, save_state, score, select, OutputLock,
};
use litscreen_core::statements::fetch_paraphrases;

#[derive(Parser)]
#[command(
    name = "litscreen",
    version,
    about = "Select high-relevance papers from a bibliographic export by statement-similarity scoring, PCA gating, and clustering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Path to the run configuration (TOML).
    #[arg(long)]
    config: PathBuf,

    /// Override the clustering seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the embedding provider.
    #[arg(long, value_parser = parse_embedder)]
    embedder: Option<ProviderKind>,

    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_embedder(s: &str) -> Result<ProviderKind, String> {
    ProviderKind::parse(s).ok_or_else(|| format!("unknown embedder {s:?}; use mock or remote"))
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and emit the report.
    Run(CommonArgs),
    /// Run ingestion, embedding, and relevance scoring, then stop.
    /// Persists state.json and relevance.csv for `select`.
    Score(CommonArgs),
    /// Resume from a cached relevance matrix and emit the report.
    Select(CommonArgs),
    /// Re-render the CSV outputs from an existing report.json.
    Report {
        /// Directory holding report.json; outputs are rewritten in place.
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse and validate a configuration, checking input paths.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate paraphrase variants for each statement via the configured
    /// chat endpoint and print a TOML snippet to freeze into the config.
    Paraphrase {
        #[arg(long)]
        config: PathBuf,
        /// Paraphrases per statement (defaults to the config's count).
        #[arg(long)]
        count: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

enum CliError {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

fn validation<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Validation(e.into())
}

fn runtime<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Runtime(e.into())
}

fn dispatch() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let (cfg, hash) = prepare(&args)?;
            let lock = OutputLock::acquire(&cfg.output.dir).map_err(runtime)?;
            let (state, report) = run(&cfg, &hash).map_err(runtime)?;
            save_state(&state, &cfg.output.dir).map_err(runtime)?;
            emit_report(&report, &cfg.output.dir).map_err(runtime)?;
            drop(lock);
            println!(
                "selected {} of {} records; winner {}; report written to {}",
                report.selected_ids.len(),
                state.records.len(),
                report.winner,
                cfg.output.dir.join("report.json").display()
            );
            Ok(())
        }
        Command::Score(args) => {
            let (cfg, hash) = prepare(&args)?;
            let lock = OutputLock::acquire(&cfg.output.dir).map_err(runtime)?;
            let state = score(&cfg, &hash).map_err(runtime)?;
            save_state(&state, &cfg.output.dir).map_err(runtime)?;
            drop(lock);
            println!(
                "scored {} records; state written to {}",
                state.records.len(),
                cfg.output.dir.join("state.json").display()
            );
            Ok(())
        }
        Command::Select(args) => {
            let (cfg, hash) = prepare(&args)?;
            let lock = OutputLock::acquire(&cfg.output.dir).map_err(runtime)?;
            let state = load_state(&cfg.output.dir).map_err(runtime)?;
            if state.config_hash != hash {
                return Err(validation(anyhow::anyhow!(
                    "state.json was produced by a different config (hash {} vs {}); re-run `score`",
                    state.config_hash,
                    hash
                )));
            }
            let report = select(&cfg, &state).map_err(runtime)?;
            emit_report(&report, &cfg.output.dir).map_err(runtime)?;
            drop(lock);
            println!(
                "selected {} records; winner {}; report written to {}",
                report.selected_ids.len(),
                report.winner,
                cfg.output.dir.join("report.json").display()
            );
            Ok(())
        }
        Command::Report { out } => {
            let report = load_report(&out.join("report.json")).map_err(runtime)?;
            emit_report(&report, &out).map_err(runtime)?;
            println!("re-rendered outputs in {}", out.display());
            Ok(())
        }
        Command::ValidateConfig { config } => {
            let loaded = load_config(&config).map_err(validation)?;
            loaded.config.validate().map_err(validation)?;
            println!("config ok (hash {})", loaded.hash);
            Ok(())
        }
        Command::Paraphrase { config, count } => paraphrase(&config, count),
    }
}

fn prepare(args: &CommonArgs) -> Result<(PipelineConfig, String), CliError> {
    let LoadedConfig { mut config, hash } = load_config(&args.config).map_err(validation)?;
    config.apply_overrides(args.seed, args.embedder, args.out.clone());
    config.validate().map_err(validation)?;
    Ok((config, hash))
}

fn paraphrase(config_path: &Path, count: Option<usize>) -> Result<(), CliError> {
    let loaded = load_config(config_path).map_err(validation)?;
    let cfg = loaded.config;
    let section = cfg.paraphrase.as_ref().ok_or_else(|| {
        validation(anyhow::anyhow!(
            "config has no [paraphrase] section with a chat endpoint"
        ))
    })?;
    let api_key = match &section.api_key_env {
        Some(var) => Some(
            std::env::var(var)
                .map_err(|_| validation(anyhow::anyhow!("environment variable {var} not set")))?,
        ),
        None => None,
    };
    let endpoint = RemoteEndpoint {
        url: section.endpoint.clone(),
        model: section.model.clone(),
        api_key,
        auth_header: "Authorization".to_string(),
        timeout_secs: 120,
    };
    let n = count.unwrap_or(section.count);

    for statement in &cfg.statements {
        let variants = fetch_paraphrases(
            statement,
            n,
            &endpoint,
            &section.prompt,
            cfg.embedding.max_retries,
            cfg.embedding.retry_base_ms,
        )
        .map_err(runtime)?;
        println!("[[statements]]");
        println!("label = {}", toml_string(&statement.label));
        println!("text = {}", toml_string(&statement.text));
        println!("paraphrases = [");
        for variant in &variants {
            println!("    {},", toml_string(variant));
        }
        println!("]");
        println!();
    }
    Ok(())
}

fn toml_string(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}
