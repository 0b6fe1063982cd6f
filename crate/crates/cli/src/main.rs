//! The `qaforge` binary: argument parsing and exit-code mapping.
//!
//! Exit codes: 0 success, 2 configuration error, 3 missing upstream stage
//! artifact (the message names the command to run), 4 backend failure,
//! 1 anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qaforge_cli::config::{Overrides, PipelineConfig};
use qaforge_cli::error::CliError;
use qaforge_cli::stages::StageOutcome;
use qaforge_cli::{pipeline, report};

#[derive(Parser)]
#[command(
    name = "qaforge",
    version,
    about = "Builds and evaluates Q&A datasets from a structured document corpus"
)]
struct Cli {
    /// Configuration file; relative paths inside it resolve against its
    /// directory.
    #[arg(short, long, global = true, default_value = "config.toml")]
    config: PathBuf,
    /// Run directory for stage outputs (overrides `output.run_dir`).
    #[arg(long, global = true)]
    run_dir: Option<PathBuf>,
    /// Global random seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Forbid any backend that would touch the network.
    #[arg(long, global = true)]
    offline: bool,
    /// Corpus manifest (overrides `corpus.manifest`).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Tokens per chunk (overrides `chunking.chunk_tokens`).
    #[arg(long, global = true)]
    chunk_tokens: Option<usize>,
    /// Token overlap between chunks (overrides `chunking.overlap_tokens`).
    #[arg(long, global = true)]
    overlap_tokens: Option<usize>,
    /// Passages retrieved per RAG answer (overrides `generation.k`).
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Generation method: separated | combined.
    #[arg(long, global = true)]
    method: Option<String>,
    /// Prompt context mode: none | region | external.
    #[arg(long, global = true)]
    context_mode: Option<String>,
    /// Rerun the stage even when its inputs are unchanged.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Parse the corpus manifest and normalize every document.
    Ingest,
    /// Cut every section into overlapping token windows.
    Chunk,
    /// Embed all chunks and persist the vector index.
    Index,
    /// Extract supporting context (locations, crops, ...) per section.
    Tag,
    /// Generate questions (or combined Q&A pairs) per section.
    Genq,
    /// Answer pending questions with retrieval-augmented calls.
    Gena,
    /// Compute overlap, diversity, and token-count metrics.
    Metrics,
    /// Score answered pairs with the configured judge metrics.
    Judge,
    /// Sweep recall@k over the generated questions.
    Recall,
    /// Measure recall as near-duplicate distractors grow the index.
    Ablate,
    /// Export answered pairs as fine-tune prompt/completion records.
    ExportFt,
    /// Render report.md and one CSV per table from stage files.
    Report,
}

impl Command {
    fn verb(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Chunk => "chunk",
            Command::Index => "index",
            Command::Tag => "tag",
            Command::Genq => "genq",
            Command::Gena => "gena",
            Command::Metrics => "metrics",
            Command::Judge => "judge",
            Command::Recall => "recall",
            Command::Ablate => "ablate",
            Command::ExportFt => "export-ft",
            Command::Report => "report",
        }
    }
}

fn run(cli: &Cli) -> Result<StageOutcome, CliError> {
    let overrides = Overrides {
        run_dir: cli.run_dir.clone(),
        seed: cli.seed,
        offline: cli.offline,
        manifest: cli.manifest.clone(),
        chunk_tokens: cli.chunk_tokens,
        overlap_tokens: cli.overlap_tokens,
        k: cli.k,
        method: cli.method.clone(),
        context_mode: cli.context_mode.clone(),
    };
    let cfg = PipelineConfig::load(&cli.config, &overrides)?;
    match cli.command {
        Command::Ingest => pipeline::cmd_ingest(&cfg, cli.force),
        Command::Chunk => pipeline::cmd_chunk(&cfg, cli.force),
        Command::Index => pipeline::cmd_index(&cfg, cli.force),
        Command::Tag => pipeline::cmd_tag(&cfg, cli.force),
        Command::Genq => pipeline::cmd_genq(&cfg, cli.force),
        Command::Gena => pipeline::cmd_gena(&cfg, cli.force),
        Command::Metrics => pipeline::cmd_metrics(&cfg, cli.force),
        Command::Judge => pipeline::cmd_judge(&cfg, cli.force),
        Command::Recall => pipeline::cmd_recall(&cfg, cli.force),
        Command::Ablate => pipeline::cmd_ablate(&cfg, cli.force),
        Command::ExportFt => pipeline::cmd_export_ft(&cfg, cli.force),
        Command::Report => report::cmd_report(&cfg, cli.force),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            println!(
                "{}: {}",
                cli.command.verb(),
                match outcome {
                    StageOutcome::Ran => "ok",
                    StageOutcome::Skipped => "up to date",
                }
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
