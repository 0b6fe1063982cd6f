//! Pipeline configuration: one TOML file, overridden by CLI flags.
//!
//! Relative paths in the file resolve against the file's own directory, so a
//! config can travel with its corpus. Validation happens once, after
//! overrides are applied; every complaint is a [`CliError::Config`] (exit 2).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

/// Generation strategy: one call for questions then one RAG call per answer,
/// or a single call that emits question-answer pairs together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMethodConfig {
    Separated,
    Combined,
}

/// How much document metadata the generation prompt receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextModeConfig {
    None,
    Region,
    External,
}

/// Judge metrics the CLI knows how to run.
pub const KNOWN_JUDGE_METRICS: &[&str] = &[
    "fluency",
    "question_relevance",
    "global_relevance",
    "coverage",
    "answer_relevance",
    "answer_coherence",
    "answer_groundedness",
    "succinctness",
    "correctness",
    "guideline",
];

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    /// Manifest JSON listing documents; entry paths resolve against it.
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChunkingConfig {
    pub chunk_tokens: usize,
    pub overlap_tokens: usize,
}

impl Default for ChunkingConfig {
    fn default() -> Self {
        Self { chunk_tokens: 200, overlap_tokens: 20 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingConfig {
    /// `hash` (seeded, local), `file` (precomputed vectors), or `http`.
    pub backend: String,
    pub dims: usize,
    /// Vector JSONL for the `file` backend.
    pub vectors: Option<PathBuf>,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self { backend: "hash".into(), dims: 64, vectors: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerationConfig {
    /// `stub` (deterministic, offline), `replay` (recorded fixtures), or
    /// `http`.
    pub backend: String,
    pub model: String,
    pub method: GenerationMethodConfig,
    pub context_mode: ContextModeConfig,
    /// Passages retrieved per RAG answer.
    pub k: usize,
    /// Optional few-shot examples file spliced into the question prompt.
    pub examples: Option<PathBuf>,
    pub temperature: f64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            backend: "stub".into(),
            model: "stub-model".into(),
            method: GenerationMethodConfig::Separated,
            context_mode: ContextModeConfig::External,
            k: 3,
            examples: None,
            temperature: 0.7,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JudgeConfig {
    pub backend: String,
    pub model: String,
    /// Which metrics to run; see [`KNOWN_JUDGE_METRICS`].
    pub metrics: Vec<String>,
    /// Trials per (pair, metric); 5 matches the variance harness default.
    pub trials: usize,
    /// Pairs judged per run (in file order), to bound spend.
    pub max_items: usize,
    pub temperature: f64,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        Self {
            backend: "stub".into(),
            model: "stub-judge".into(),
            metrics: vec![
                "fluency".into(),
                "question_relevance".into(),
                "coverage".into(),
                "answer_relevance".into(),
                "answer_groundedness".into(),
            ],
            trials: 5,
            max_items: 8,
            temperature: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecallConfig {
    /// Values of k to sweep; duplicates are collapsed, order normalized.
    pub ks: Vec<usize>,
}

impl Default for RecallConfig {
    fn default() -> Self {
        Self { ks: vec![1, 2, 3, 5, 10] }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    pub k: usize,
    /// Cumulative index sizes as multiples of the base size.
    pub growth_factors: Vec<f64>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self { k: 3, growth_factors: vec![1.5, 2.0, 4.0, 6.8] }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Stage artifacts, reports, and the call ledger land here.
    pub run_dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { run_dir: PathBuf::from("run") }
    }
}

/// Remote endpoint settings, consulted only when a backend says `http`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HttpConfig {
    pub endpoint: String,
    /// Name of the environment variable holding the credential; the value
    /// itself never appears in config files.
    pub api_key_env: Option<String>,
    pub embed_endpoint: String,
    pub embed_model: String,
    pub timeout_secs: u64,
    pub max_attempts: u32,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            api_key_env: None,
            embed_endpoint: String::new(),
            embed_model: String::new(),
            timeout_secs: 30,
            max_attempts: 3,
        }
    }
}

/// Fixture directory for the `replay` backend.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReplayConfig {
    pub fixtures: Option<PathBuf>,
}

/// The whole pipeline configuration, parsed from one TOML file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// When true, constructing any `http` backend is a config error, so the
    /// entire run is guaranteed to touch no network.
    #[serde(default)]
    pub offline: bool,
    /// Global seed: flows to the hash embedder, the stub backend, the
    /// synthetic embedding table, and distractor construction.
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub chunking: ChunkingConfig,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub generation: GenerationConfig,
    #[serde(default)]
    pub judge: JudgeConfig,
    #[serde(default)]
    pub recall: RecallConfig,
    #[serde(default)]
    pub ablation: AblationConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub http: HttpConfig,
    #[serde(default)]
    pub replay: ReplayConfig,
}

fn default_seed() -> u64 {
    42
}

/// CLI flag values that override config keys before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub run_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub offline: bool,
    pub manifest: Option<PathBuf>,
    pub chunk_tokens: Option<usize>,
    pub overlap_tokens: Option<usize>,
    pub k: Option<usize>,
    pub method: Option<String>,
    pub context_mode: Option<String>,
}

impl PipelineConfig {
    /// Reads, parses, resolves, overrides, and validates a config file.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read {}: {e}", path.display()))
        })?;
        let mut cfg: PipelineConfig = toml::from_str(&raw).map_err(|e| {
            CliError::config(format!("cannot parse {}: {e}", path.display()))
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve_paths(base);
        cfg.apply(overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resolves relative config paths against the config file's directory.
    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        resolve(&mut self.corpus.manifest);
        resolve(&mut self.output.run_dir);
        if let Some(examples) = self.generation.examples.as_mut() {
            resolve(examples);
        }
        if let Some(vectors) = self.embedding.vectors.as_mut() {
            resolve(vectors);
        }
        if let Some(fixtures) = self.replay.fixtures.as_mut() {
            resolve(fixtures);
        }
    }

    /// Applies CLI flag overrides. Flags win over file keys; paths given on
    /// the command line are relative to the working directory, not the file.
    fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(run_dir) = &o.run_dir {
            self.output.run_dir = run_dir.clone();
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if o.offline {
            self.offline = true;
        }
        if let Some(manifest) = &o.manifest {
            self.corpus.manifest = manifest.clone();
        }
        if let Some(chunk_tokens) = o.chunk_tokens {
            self.chunking.chunk_tokens = chunk_tokens;
        }
        if let Some(overlap_tokens) = o.overlap_tokens {
            self.chunking.overlap_tokens = overlap_tokens;
        }
        if let Some(k) = o.k {
            self.generation.k = k;
        }
        if let Some(method) = &o.method {
            self.generation.method = match method.as_str() {
                "separated" => GenerationMethodConfig::Separated,
                "combined" => GenerationMethodConfig::Combined,
                other => {
                    return Err(CliError::config(format!(
                        "unknown --method `{other}` (expected separated|combined)"
                    )))
                }
            };
        }
        if let Some(mode) = &o.context_mode {
            self.generation.context_mode = match mode.as_str() {
                "none" => ContextModeConfig::None,
                "region" => ContextModeConfig::Region,
                "external" => ContextModeConfig::External,
                other => {
                    return Err(CliError::config(format!(
                        "unknown --context-mode `{other}` (expected none|region|external)"
                    )))
                }
            };
        }
        Ok(())
    }

    /// Checks every invariant the stages assume. Referenced paths must exist
    /// now, not when a stage finally reaches for them.
    fn validate(&self) -> Result<(), CliError> {
        if !self.corpus.manifest.is_file() {
            return Err(CliError::config(format!(
                "corpus.manifest does not exist: {}",
                self.corpus.manifest.display()
            )));
        }
        if let Some(examples) = &self.generation.examples {
            if !examples.is_file() {
                return Err(CliError::config(format!(
                    "generation.examples does not exist: {}",
                    examples.display()
                )));
            }
        }
        if self.chunking.chunk_tokens == 0 {
            return Err(CliError::config("chunking.chunk_tokens must be >= 1"));
        }
        if self.chunking.overlap_tokens >= self.chunking.chunk_tokens {
            return Err(CliError::config(format!(
                "chunking.overlap_tokens ({}) must be smaller than chunk_tokens ({})",
                self.chunking.overlap_tokens, self.chunking.chunk_tokens
            )));
        }
        if self.generation.k == 0 {
            return Err(CliError::config("generation.k must be >= 1"));
        }
        match self.embedding.backend.as_str() {
            "hash" => {
                if self.embedding.dims == 0 {
                    return Err(CliError::config("embedding.dims must be >= 1"));
                }
            }
            "file" => {
                let vectors = self.embedding.vectors.as_ref().ok_or_else(|| {
                    CliError::config("embedding.backend = \"file\" requires embedding.vectors")
                })?;
                if !vectors.is_file() {
                    return Err(CliError::config(format!(
                        "embedding.vectors does not exist: {}",
                        vectors.display()
                    )));
                }
            }
            "http" => self.require_online("embedding")?,
            other => {
                return Err(CliError::config(format!(
                    "unknown embedding.backend `{other}` (expected hash|file|http)"
                )))
            }
        }
        for (label, backend) in
            [("generation", &self.generation.backend), ("judge", &self.judge.backend)]
        {
            match backend.as_str() {
                "stub" => {}
                "replay" => {
                    let fixtures = self.replay.fixtures.as_ref().ok_or_else(|| {
                        CliError::config(format!(
                            "{label}.backend = \"replay\" requires replay.fixtures"
                        ))
                    })?;
                    if !fixtures.is_dir() {
                        return Err(CliError::config(format!(
                            "replay.fixtures does not exist: {}",
                            fixtures.display()
                        )));
                    }
                }
                "http" => self.require_online(label)?,
                other => {
                    return Err(CliError::config(format!(
                        "unknown {label}.backend `{other}` (expected stub|replay|http)"
                    )))
                }
            }
        }
        if self.judge.trials == 0 {
            return Err(CliError::config("judge.trials must be >= 1"));
        }
        let known: BTreeSet<&str> = KNOWN_JUDGE_METRICS.iter().copied().collect();
        for metric in &self.judge.metrics {
            if !known.contains(metric.as_str()) {
                return Err(CliError::config(format!(
                    "unknown judge metric `{metric}` (known: {})",
                    KNOWN_JUDGE_METRICS.join(", ")
                )));
            }
        }
        if self.recall.ks.is_empty() {
            return Err(CliError::config("recall.ks must name at least one k"));
        }
        if self.recall.ks.iter().any(|&k| k == 0) {
            return Err(CliError::config("recall.ks entries must be >= 1"));
        }
        if self.ablation.k == 0 {
            return Err(CliError::config("ablation.k must be >= 1"));
        }
        let mut last = 1.0f64;
        for &factor in &self.ablation.growth_factors {
            if factor <= last {
                return Err(CliError::config(format!(
                    "ablation.growth_factors must be strictly increasing and > 1 (saw {factor} after {last})"
                )));
            }
            last = factor;
        }
        Ok(())
    }

    fn require_online(&self, label: &str) -> Result<(), CliError> {
        if self.offline {
            return Err(CliError::config(format!(
                "offline mode forbids {label}.backend = \"http\""
            )));
        }
        if self.http.endpoint.is_empty() {
            return Err(CliError::config(format!(
                "{label}.backend = \"http\" requires http.endpoint"
            )));
        }
        Ok(())
    }

    /// Normalized recall sweep: ascending, deduplicated.
    pub fn recall_ks(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.recall.ks.iter().copied().collect();
        set.into_iter().collect()
    }

    /// Few-shot examples content, or empty when none are configured.
    pub fn examples_text(&self) -> Result<String, CliError> {
        match &self.generation.examples {
            Some(path) => Ok(std::fs::read_to_string(path)?),
            None => Ok(String::new()),
        }
    }
}
