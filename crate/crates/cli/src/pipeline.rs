//! The pipeline stages behind each CLI verb.
//!
//! Every command follows the same shape: name its inputs (files and config
//! parameters) as digests, skip when the stage marker already records exactly
//! those digests, otherwise do the work, write one output file atomically,
//! and record the marker. Stage outputs are plain JSONL — inspectable,
//! diffable, and byte-deterministic for a fixed config and seed. Timestamps
//! exist only in `run.log`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use qaforge_core::corpus::{
    chunk_document, corpus_stats, flatten_section, load_document, serialize_document, Chunk,
    CorpusManifest, DocumentRecord,
};
use qaforge_core::genesis::{
    answer_pairs_rag, export_finetune_dataset, extract_supporting_context, generate_combined,
    generate_questions, ContextMode, GenerationOptions, PromptTemplate, QAPair,
    SupportingContext, COMBINED_TEMPLATE, QUESTION_TEMPLATE, RAG_ANSWER_TEMPLATE,
    SUPPORTING_CONTEXT_TEMPLATE,
};
use qaforge_core::index::{
    build_index, embed, index_growth_ablation, load_index, recall_at_k, save_index,
    AblationPoint, Probe, RecallReport, VectorIndex,
};
use qaforge_core::judge::{
    make_guideline, rate_answer_coherence, rate_answer_groundedness, rate_answer_relevance,
    rate_correctness, rate_coverage, rate_fluency, rate_global_relevance,
    rate_question_relevance, rate_succinctness, score_with_guideline, summarize_trials,
    JudgeOptions, JudgeVerdict, VarianceReport,
};
use qaforge_core::llmclient::{ClientHandle, Embedder};
use qaforge_core::textmetrics::{
    details, diversity_score_with_labels, overlap_score, union_vocab, WordEmbeddingTable,
};

use crate::backends;
use crate::config::{ContextModeConfig, GenerationMethodConfig, PipelineConfig};
use crate::error::CliError;
use crate::stages::{self, files, StageArtifact, StageOutcome};

// ---------------------------------------------------------------------------
// Row types shared between stages and the report.

/// Supporting context extracted for one section by the tagging stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagRow {
    pub doc_id: String,
    pub section_path: Vec<usize>,
    pub context: SupportingContext,
}

/// One statistical text-metric measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum MetricRow {
    /// KL divergence between a source text and its generated questions;
    /// lower means more overlap.
    Overlap { scope: String, value: f64, n_questions: usize },
    /// Mean off-diagonal pairwise WMD over the question set; higher means
    /// more varied questions.
    Diversity { scope: String, value: f64, n_questions: usize },
    /// Token counts for one question-answer pair.
    Details { scope: String, question_tokens: usize, answer_tokens: usize },
}

/// One judge verdict tied back to the pair it judged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentRow {
    pub qa_id: String,
    #[serde(flatten)]
    pub verdict: JudgeVerdict,
}

/// Trial-spread summary for one (pair, metric).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub qa_id: String,
    #[serde(flatten)]
    pub report: VarianceReport,
}

/// One index-growth measurement at a fixed k.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationRow {
    pub k: usize,
    #[serde(flatten)]
    pub point: AblationPoint,
}

// ---------------------------------------------------------------------------
// JSONL plumbing.

/// Writes bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    let mut file = fs::File::create(&tmp)?;
    file.write_all(bytes)?;
    file.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Serializes rows to JSONL and writes them atomically.
pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut out = String::new();
    for row in rows {
        let line = serde_json::to_string(row).map_err(|e| {
            CliError::Other(format!("serializing a row of {}: {e}", path.display()))
        })?;
        out.push_str(&line);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Reads a JSONL file, one row per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let raw = fs::read_to_string(path)
        .map_err(|e| CliError::Other(format!("reading {}: {e}", path.display())))?;
    raw.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| CliError::Other(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Stage scaffolding.

/// Runs one stage unless its marker already records exactly these inputs.
pub(crate) fn run_stage<F>(
    cfg: &PipelineConfig,
    force: bool,
    name: &str,
    output: &str,
    input_digests: BTreeMap<String, String>,
    work: F,
) -> Result<StageOutcome, CliError>
where
    F: FnOnce(&Path) -> Result<(), CliError>,
{
    let run_dir = cfg.output.run_dir.as_path();
    fs::create_dir_all(run_dir)?;
    if !force && stages::up_to_date(run_dir, name, &input_digests) {
        log::info!("{name}: inputs unchanged, skipping");
        stages::log_stage(run_dir, name, StageOutcome::Skipped);
        return Ok(StageOutcome::Skipped);
    }
    work(&run_dir.join(output))?;
    stages::write_marker(
        run_dir,
        &StageArtifact {
            stage: name.to_string(),
            input_digests,
            output_path: output.to_string(),
        },
    )?;
    stages::log_stage(run_dir, name, StageOutcome::Ran);
    Ok(StageOutcome::Ran)
}

fn params_digest(parts: &[String]) -> (String, String) {
    ("params".to_string(), stages::digest_params(parts))
}

fn file_digest(path: &Path, key: &str) -> (String, String) {
    (key.to_string(), stages::digest_file(path))
}

fn require(cfg: &PipelineConfig, file: &str, produced_by: &str) -> Result<PathBuf, CliError> {
    stages::require_artifact(&cfg.output.run_dir, file, produced_by)
}

// ---------------------------------------------------------------------------
// ingest

/// Parses every manifest document into the canonical record shape.
pub fn cmd_ingest(cfg: &PipelineConfig, force: bool) -> Result<StageOutcome, CliError> {
    let manifest_path = &cfg.corpus.manifest;
    let manifest_raw = fs::read(manifest_path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", manifest_path.display())))?;
    let manifest = CorpusManifest::from_json(&manifest_raw)
        .map_err(|e| CliError::config(format!("{}: {e}", manifest_path.display())))?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let mut digests = BTreeMap::from([("manifest".to_string(), stages::digest_bytes(&manifest_raw))]);
    let mut raw_docs = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let path = base.join(&entry.path);
        let raw = fs::read(&path).map_err(|e| {
            CliError::config(format!(
                "manifest entry `{}` points at an unreadable file {}: {e}",
                entry.doc_id,
                path.display()
            ))
        })?;
        digests.insert(format!("doc:{}", entry.doc_id), stages::digest_bytes(&raw));
        raw_docs.push((entry.doc_id.clone(), raw));
    }

    run_stage(cfg, force, "ingest", files::DOCUMENTS, digests, |out| {
        let mut docs = Vec::with_capacity(raw_docs.len());
        for (doc_id, raw) in &raw_docs {
            let doc = load_document(raw)?;
            if &doc.doc_id != doc_id {
                return Err(CliError::Other(format!(
                    "manifest lists `{doc_id}` but its file parses as `{}`",
                    doc.doc_id
                )));
            }
            docs.push(doc);
        }
        let totals = corpus_stats(&manifest, &docs)?;
        log::info!("ingest: {} documents, {} tokens", totals.documents, totals.tokens);
        let mut text = String::new();
        for doc in &docs {
            text.push_str(&serialize_document(doc));
            text.push('\n');
        }
        write_atomic(out, text.as_bytes())
    })
}

// ---------------------------------------------------------------------------
// chunk

/// Cuts every section into overlapping token windows.
pub fn cmd_chunk(cfg: &PipelineConfig, force: bool) -> Result<StageOutcome, CliError> {
    let docs_path = require(cfg, files::DOCUMENTS, "ingest")?;
    let digests = BTreeMap::from([
        file_digest(&docs_path, files::DOCUMENTS),
        params_digest(&[
            cfg.chunking.chunk_tokens.to_string(),
            cfg.chunking.overlap_tokens.to_string(),
        ]),
    ]);
    run_stage(cfg, force, "chunk", files::CHUNKS, digests, |out| {
        let docs: Vec<DocumentRecord> = read_jsonl(&docs_path)?;
        let mut chunks = Vec::new();
        for doc in &docs {
            chunks.extend(chunk_document(
                doc,
                cfg.chunking.chunk_tokens,
                cfg.chunking.overlap_tokens,
            )?);
        }
        log::info!("chunk: {} chunks from {} documents", chunks.len(), docs.len());
        write_jsonl(out, &chunks)
    })
}

// ---------------------------------------------------------------------------
// index

fn embedding_params(cfg: &PipelineConfig) -> Vec<String> {
    let mut parts = vec![
        cfg.embedding.backend.clone(),
        cfg.embedding.dims.to_string(),
        cfg.seed.to_string(),
    ];
    if let Some(vectors) = &cfg.embedding.vectors {
        parts.push(stages::digest_file(vectors));
    }
    parts
}

/// Embeds every chunk and persists the vector index.
pub fn cmd_index(cfg: &PipelineConfig, force: bool) -> Result<StageOutcome, CliError> {
    let chunks_path = require(cfg, files::CHUNKS, "chunk")?;
    let digests = BTreeMap::from([
        file_digest(&chunks_path, files::CHUNKS),
        params_digest(&embedding_params(cfg)),
    ]);
    run_stage(cfg, force, "index", files::INDEX, digests, |out| {
        let chunks: Vec<Chunk> = read_jsonl(&chunks_path)?;
        let backend = backends::embedder(cfg)?;
        let index = build_index(&chunks, backend.as_ref())?;
        log::info!("index: {} vectors of {} dims", index.len(), index.dims());
        let mut buf = Vec::new();
        save_index(&index, &mut buf)?;
        write_atomic(out, &buf)
    })
}

// ---------------------------------------------------------------------------
// tag

/// Extracts supporting context (locations, crops, cattle, diseases) for
/// every non-empty section.
pub fn cmd_tag(cfg: &PipelineConfig, force: bool) -> Result<StageOutcome, CliError> {
    let docs_path = require(cfg, files::DOCUMENTS, "ingest")?;
    let digests = BTreeMap::from([
        file_digest(&docs_path, files::DOCUMENTS),
        params_digest(&[
            cfg.generation.backend.clone(),
            cfg.generation.model.clone(),
            cfg.seed.to_string(),
        ]),
    ]);
    run_stage(cfg, force, "tag", files::TAGS, digests, |out| {
        let docs: Vec<DocumentRecord> = read_jsonl(&docs_path)?;
        let client = backends::chat_client(&cfg.generation.backend, cfg, &cfg.output.run_dir)?;
        let template = tag_template()?;
        let mut rows = Vec::new();
        for doc in &docs {
            for section in &doc.sections {
                let text = flatten_section(section);
                if text.trim().is_empty() {
                    continue;
                }
                let context =
                    extract_supporting_context(&client, &cfg.generation.model, &template, &text)?;
                rows.push(TagRow {
                    doc_id: doc.doc_id.clone(),
                    section_path: section.path.clone(),
                    context,
                });
            }
        }
        log::info!("tag: {} sections tagged", rows.len());
        write_jsonl(out, &rows)
    })
}

fn tag_template() -> Result<PromptTemplate, CliError> {
    PromptTemplate::parse("supporting_context", SUPPORTING_CONTEXT_TEMPLATE).map_err(CliError::from)
}

// ---------------------------------------------------------------------------
// genq

/// Section identity used to join chunks, tags, and documents.
type SectionKey = (String, Vec<usize>);

fn chunked_sections(chunks: &[Chunk]) -> BTreeSet<SectionKey> {
    chunks
        .iter()
        .map(|c| (c.doc_id.clone(), c.section_path.clone()))
        .collect()
}

/// Generates questions (separated) or answered pairs (combined) per section.
pub fn cmd_genq(cfg: &PipelineConfig, force: bool) -> Result<StageOutcome, CliError> {
    let docs_path = require(cfg, files::DOCUMENTS, "ingest")?;
    let chunks_path = require(cfg, files::CHUNKS, "chunk")?;
    let tags_path = match cfg.generation.context_mode {
        ContextModeConfig::External => Some(require(cfg, files::TAGS, "tag")?),
        _ => None,
    };
    let examples = cfg.examples_text()?;

    let mut digests = BTreeMap::from([
        file_digest(&docs_path, files::DOCUMENTS),
        file_digest(&chunks_path, files::CHUNKS),
        params_digest(&[
            cfg.generation.backend.clone(),
            cfg.generation.model.clone(),
            format!("{:?}", cfg.generation.method),
            format!("{:?}", cfg.generation.context_mode),
            cfg.generation.temperature.to_string(),
            cfg.seed.to_string(),
            stages::digest_bytes(examples.as_bytes()),
        ]),
    ]);
    if let Some(tags_path) = &tags_path {
        digests.insert(files::TAGS.to_string(), stages::digest_file(tags_path));
    }
    if cfg.generation.context_mode == ContextModeConfig::Region {
        digests.insert("manifest".to_string(), stages::digest_file(&cfg.corpus.manifest));
    }

    run_stage(cfg, force, "genq", files::QUESTIONS, digests, |out| {
        let docs: Vec<DocumentRecord> = read_jsonl(&docs_path)?;
        let chunks: Vec<Chunk> = read_jsonl(&chunks_path)?;
        if cfg.chunking.overlap_tokens == 0 && multi_chunk_sections_exist(&chunks) {
            return Err(CliError::config(
                "question generation splices section text from overlapping chunks; \
                 chunking.overlap_tokens = 0 leaves gaps between chunks of multi-chunk \
                 sections, so raise the overlap or the chunk size",
            ));
        }
        let tags: BTreeMap<SectionKey, SupportingContext> = match &tags_path {
            Some(path) => read_jsonl::<TagRow>(path)?
                .into_iter()
                .map(|row| ((row.doc_id, row.section_path), row.context))
                .collect(),
            None => BTreeMap::new(),
        };
        let manifest = CorpusManifest::from_path(&cfg.corpus.manifest)?;
        let client = backends::chat_client(&cfg.generation.backend, cfg, &cfg.output.run_dir)?;
        let template = match cfg.generation.method {
            GenerationMethodConfig::Separated => {
                PromptTemplate::parse("question_generation", QUESTION_TEMPLATE)?
            }
            GenerationMethodConfig::Combined => {
                PromptTemplate::parse("combined_generation", COMBINED_TEMPLATE)?
            }
        };

        let sections_with_chunks = chunked_sections(&chunks);
        let mut pairs: Vec<QAPair> = Vec::new();
        let mut sections_seen = 0usize;
        for doc in &docs {
            for section in &doc.sections {
                let key: SectionKey = (doc.doc_id.clone(), section.path.clone());
                if !sections_with_chunks.contains(&key) {
                    continue;
                }
                sections_seen += 1;
                let mode = context_mode_for(cfg, &manifest, &tags, &key)?;
                let opts = GenerationOptions::new(&cfg.generation.model, &doc.source, &doc.title)
                    .with_context(mode)
                    .with_examples(&examples)
                    .with_temperature(cfg.generation.temperature);
                let generated = match cfg.generation.method {
                    GenerationMethodConfig::Separated => generate_questions(
                        &client,
                        &template,
                        &chunks,
                        &doc.doc_id,
                        &section.path,
                        &opts,
                    )?,
                    GenerationMethodConfig::Combined => generate_combined(
                        &client,
                        &template,
                        &chunks,
                        &doc.doc_id,
                        &section.path,
                        &opts,
                    )?,
                };
                pairs.extend(generated);
            }
        }
        log::info!("genq: {} pairs from {sections_seen} sections", pairs.len());
        write_jsonl(out, &pairs)
    })
}

fn multi_chunk_sections_exist(chunks: &[Chunk]) -> bool {
    let mut counts: BTreeMap<SectionKey, usize> = BTreeMap::new();
    for chunk in chunks {
        *counts.entry((chunk.doc_id.clone(), chunk.section_path.clone())).or_insert(0) += 1;
    }
    counts.values().any(|&n| n > 1)
}

/// Resolves the configured context mode for one section.
fn context_mode_for(
    cfg: &PipelineConfig,
    manifest: &CorpusManifest,
    tags: &BTreeMap<SectionKey, SupportingContext>,
    key: &SectionKey,
) -> Result<ContextMode, CliError> {
    match cfg.generation.context_mode {
        ContextModeConfig::None => Ok(ContextMode::NoContext),
        ContextModeConfig::Region => {
            let region = manifest.region_of(&key.0).unwrap_or_default();
            if region.trim().is_empty() {
                return Err(CliError::config(format!(
                    "context_mode = \"region\" but the manifest gives document `{}` no region",
                    key.0
                )));
            }
            Ok(ContextMode::Region { region: region.to_string() })
        }
        ContextModeConfig::External => match tags.get(key) {
            Some(context) => Ok(ContextMode::External { context: context.clone() }),
            None => Err(CliError::Dependency {
                missing: format!("tag row for `{}` section {:?}", key.0, key.1),
                command: "tag".to_string(),
            }),
        },
    }
}

// ---------------------------------------------------------------------------
// gena

/// Fills in answers for every unanswered pair via retrieval-augmented calls.
pub fn cmd_gena(cfg: &PipelineConfig, force: bool) -> Result<StageOutcome, CliError> {
    let questions_path = require(cfg, files::QUESTIONS, "genq")?;
    let index_path = require(cfg, files::INDEX, "index")?;
    let chunks_path = require(cfg, files::CHUNKS, "chunk")?;
    let digests = BTreeMap::from([
        file_digest(&questions_path, files::QUESTIONS),
        file_digest(&index_path, files::INDEX),
        file_digest(&chunks_path, files::CHUNKS),
        params_digest(&[
            cfg.generation.backend.clone(),
            cfg.generation.model.clone(),
            cfg.generation.k.to_string(),
            cfg.generation.temperature.to_string(),
            cfg.seed.to_string(),
        ]),
    ]);
    run_stage(cfg, force, "gena", files::ANSWERS, digests, |out| {
        let mut pairs: Vec<QAPair> = read_jsonl(&questions_path)?;
        let unanswered = pairs.iter().filter(|p| p.answer.is_none()).count();
        if unanswered == 0 {
            // Combined-mode pairs arrive answered; the stage is a copy.
            log::info!("gena: all {} pairs already answered", pairs.len());
            return write_jsonl(out, &pairs);
        }
        let index = read_index(&index_path)?;
        let chunks: Vec<Chunk> = read_jsonl(&chunks_path)?;
        let chunk_texts: BTreeMap<String, String> =
            chunks.into_iter().map(|c| (c.chunk_id, c.text)).collect();
        let client = backends::chat_client(&cfg.generation.backend, cfg, &cfg.output.run_dir)?;
        let embedder = backends::embedder(cfg)?;
        let template = PromptTemplate::parse("rag_answer", RAG_ANSWER_TEMPLATE)?;
        let filled = answer_pairs_rag(
            &client,
            &template,
            &index,
            embedder.as_ref(),
            &chunk_texts,
            &mut pairs,
            cfg.generation.k,
            &cfg.generation.model,
            cfg.generation.temperature,
        )?;
        log::info!("gena: answered {filled} of {} pairs", pairs.len());
        write_jsonl(out, &pairs)
    })
}

fn read_index(path: &Path) -> Result<VectorIndex, CliError> {
    let raw = fs::read(path)
        .map_err(|e| CliError::Other(format!("reading {}: {e}", path.display())))?;
    load_index(std::io::BufReader::new(raw.as_slice())).map_err(CliError::from)
}

// ---------------------------------------------------------------------------
// metrics

/// Computes overlap, diversity, and per-pair detail counts.
pub fn cmd_metrics(cfg: &PipelineConfig, force: bool) -> Result<StageOutcome, CliError> {
    let docs_path = require(cfg, files::DOCUMENTS, "ingest")?;
    let answers_path = require(cfg, files::ANSWERS, "gena")?;
    let digests = BTreeMap::from([
        file_digest(&docs_path, files::DOCUMENTS),
        file_digest(&answers_path, files::ANSWERS),
        params_digest(&[cfg.seed.to_string()]),
    ]);
    run_stage(cfg, force, "metrics", files::METRICS, digests, |out| {
        let docs: Vec<DocumentRecord> = read_jsonl(&docs_path)?;
        let pairs: Vec<QAPair> = read_jsonl(&answers_path)?;
        let rows = compute_metric_rows(cfg, &docs, &pairs)?;
        log::info!("metrics: {} rows", rows.len());
        write_jsonl(out, &rows)
    })
}

/// The actual metric computation, shared with recomputation tests.
pub fn compute_metric_rows(
    cfg: &PipelineConfig,
    docs: &[DocumentRecord],
    pairs: &[QAPair],
) -> Result<Vec<MetricRow>, CliError> {
    let mut rows = Vec::new();

    // Questions grouped by the section they were generated from.
    let mut by_section: BTreeMap<SectionKey, Vec<String>> = BTreeMap::new();
    for pair in pairs {
        by_section
            .entry((pair.doc_id.clone(), pair.section_path.clone()))
            .or_default()
            .push(pair.question.clone());
    }

    // Corpus-level overlap: all section texts against all questions.
    let all_questions: Vec<String> = pairs.iter().map(|p| p.question.clone()).collect();
    let corpus_text = docs
        .iter()
        .flat_map(|d| d.sections.iter().map(flatten_section))
        .collect::<Vec<_>>()
        .join("\n\n");
    if !all_questions.is_empty() && !corpus_text.trim().is_empty() {
        rows.push(MetricRow::Overlap {
            scope: "corpus".to_string(),
            value: overlap_score(&corpus_text, &all_questions)?,
            n_questions: all_questions.len(),
        });
    }

    // Per-section overlap, in document order.
    for doc in docs {
        for section in &doc.sections {
            let key: SectionKey = (doc.doc_id.clone(), section.path.clone());
            let Some(questions) = by_section.get(&key) else { continue };
            let source = flatten_section(section);
            if source.trim().is_empty() || questions.is_empty() {
                continue;
            }
            rows.push(MetricRow::Overlap {
                scope: section_scope(&key),
                value: overlap_score(&source, questions)?,
                n_questions: questions.len(),
            });
        }
    }

    // Corpus-level diversity over every generated question.
    if all_questions.len() >= 2 {
        let table = WordEmbeddingTable::synthetic(
            union_vocab(all_questions.iter().map(String::as_str)),
            16,
            cfg.seed,
        );
        let labeled: Vec<(String, String)> = pairs
            .iter()
            .map(|p| (p.qa_id.clone(), p.question.clone()))
            .collect();
        let (score, _matrix) = diversity_score_with_labels(&labeled, &table)?;
        rows.push(MetricRow::Diversity {
            scope: "corpus".to_string(),
            value: score,
            n_questions: all_questions.len(),
        });
    } else {
        log::warn!("metrics: fewer than two questions, skipping diversity");
    }

    // Per-pair token counts, for answered pairs.
    for pair in pairs {
        let Some(answer) = &pair.answer else { continue };
        let counts = details(&pair.question, answer);
        rows.push(MetricRow::Details {
            scope: pair.qa_id.clone(),
            question_tokens: counts.question_tokens,
            answer_tokens: counts.answer_tokens,
        });
    }
    Ok(rows)
}

fn section_scope(key: &SectionKey) -> String {
    let path = key.1.iter().map(usize::to_string).collect::<Vec<_>>().join(".");
    format!("{}#s{path}", key.0)
}

// ---------------------------------------------------------------------------
// judge

/// Runs the configured judge metrics over answered pairs, several trials
/// each, and records both every verdict and the per-pair spread.
pub fn cmd_judge(cfg: &PipelineConfig, force: bool) -> Result<StageOutcome, CliError> {
    let answers_path = require(cfg, files::ANSWERS, "gena")?;
    let chunks_path = require(cfg, files::CHUNKS, "chunk")?;
    let digests = BTreeMap::from([
        file_digest(&answers_path, files::ANSWERS),
        file_digest(&chunks_path, files::CHUNKS),
        params_digest(&[
            cfg.judge.backend.clone(),
            cfg.judge.model.clone(),
            cfg.judge.metrics.join(","),
            cfg.judge.trials.to_string(),
            cfg.judge.max_items.to_string(),
            cfg.judge.temperature.to_string(),
            cfg.seed.to_string(),
        ]),
    ]);
    run_stage(cfg, force, "judge", files::JUDGMENTS, digests, |out| {
        let pairs: Vec<QAPair> = read_jsonl(&answers_path)?;
        let chunks: Vec<Chunk> = read_jsonl(&chunks_path)?;
        let chunk_texts: BTreeMap<String, String> =
            chunks.into_iter().map(|c| (c.chunk_id, c.text)).collect();
        let client = backends::chat_client(&cfg.judge.backend, cfg, &cfg.output.run_dir)?;

        let selected: Vec<&QAPair> = pairs
            .iter()
            .filter(|p| p.answer.is_some())
            .take(cfg.judge.max_items)
            .collect();
        let mut judgments: Vec<JudgmentRow> = Vec::new();
        let mut variances: Vec<VarianceRow> = Vec::new();
        for pair in &selected {
            let context = provenance_text(pair, &chunk_texts)?;
            for metric in &cfg.judge.metrics {
                let trials = judge_trials(cfg, &client, pair, &context, metric)?;
                for verdict in &trials {
                    judgments.push(JudgmentRow {
                        qa_id: pair.qa_id.clone(),
                        verdict: verdict.clone(),
                    });
                }
                variances.push(VarianceRow {
                    qa_id: pair.qa_id.clone(),
                    report: summarize_trials(trials)?,
                });
            }
        }
        log::info!(
            "judge: {} pairs x {} metrics x {} trials = {} verdicts",
            selected.len(),
            cfg.judge.metrics.len(),
            cfg.judge.trials,
            judgments.len()
        );
        write_jsonl(&cfg.output.run_dir.join(files::VARIANCE), &variances)?;
        write_jsonl(out, &judgments)
    })
}

/// Splices the retrieval context a pair's provenance chunks cover.
fn provenance_text(
    pair: &QAPair,
    chunk_texts: &BTreeMap<String, String>,
) -> Result<String, CliError> {
    let mut parts = Vec::with_capacity(pair.provenance_chunk_ids.len());
    for chunk_id in &pair.provenance_chunk_ids {
        let text = chunk_texts.get(chunk_id).ok_or_else(|| {
            CliError::Other(format!(
                "pair `{}` cites chunk `{chunk_id}` which is not in {}",
                pair.qa_id,
                files::CHUNKS
            ))
        })?;
        parts.push(text.as_str());
    }
    Ok(parts.join("\n\n"))
}

/// Runs all trials of one metric for one pair.
///
/// Reference-based metrics (coherence, succinctness, correctness, guideline)
/// use the pair's own answer as the reference: judging a dataset against
/// itself measures scale usage and judge spread, not model quality. Supply a
/// gold-answer dataset for those metrics to mean more.
fn judge_trials(
    cfg: &PipelineConfig,
    client: &ClientHandle,
    pair: &QAPair,
    context: &str,
    metric: &str,
) -> Result<Vec<JudgeVerdict>, CliError> {
    let answer = pair.answer.as_deref().unwrap_or_default();
    let reference = answer;
    let question = pair.question.as_str();
    let base = JudgeOptions::new(&cfg.judge.model).with_temperature(cfg.judge.temperature);

    // The guideline itself is generated once, then applied per trial.
    let guideline = if metric == "guideline" {
        Some(make_guideline(client, &base, question, reference)?)
    } else {
        None
    };

    let mut trials = Vec::with_capacity(cfg.judge.trials);
    for trial in 0..cfg.judge.trials {
        let opts = base.clone().with_trial(trial);
        let verdict = match metric {
            "fluency" => rate_fluency(client, &opts, question)?,
            "question_relevance" => rate_question_relevance(
                client,
                &opts,
                question,
                &pair.context_mode.context_json(),
            )?,
            "global_relevance" => rate_global_relevance(client, &opts, question)?,
            "coverage" => rate_coverage(client, &opts, question, answer, context)?,
            "answer_relevance" => rate_answer_relevance(client, &opts, question, answer, context)?,
            "answer_coherence" => {
                rate_answer_coherence(client, &opts, question, reference, answer, context)?
            }
            "answer_groundedness" => rate_answer_groundedness(client, &opts, answer, context)?,
            "succinctness" => rate_succinctness(client, &opts, reference, answer)?,
            "correctness" => rate_correctness(client, &opts, question, reference, answer)?,
            "guideline" => score_with_guideline(
                client,
                &opts,
                guideline.as_deref().expect("guideline generated above"),
                question,
                answer,
            )?,
            other => {
                return Err(CliError::config(format!("unknown judge metric `{other}`")));
            }
        };
        trials.push(verdict);
    }
    Ok(trials)
}

// ---------------------------------------------------------------------------
// recall

/// Builds the recall probe set: each question embedded as a query whose
/// truth is the first chunk its section text came from.
fn question_probes(
    pairs: &[QAPair],
    embedder: &dyn Embedder,
) -> Result<Vec<Probe>, CliError> {
    let mut probes = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let Some(truth) = pair.provenance_chunk_ids.first() else {
            log::warn!("pair `{}` has no provenance, skipping as a probe", pair.qa_id);
            continue;
        };
        probes.push(Probe {
            query: embed(&pair.question, embedder)?,
            truth_chunk_id: truth.clone(),
        });
    }
    if probes.is_empty() {
        return Err(CliError::Other(
            "no usable recall probes: every pair lacks provenance".into(),
        ));
    }
    Ok(probes)
}

/// Sweeps recall@k over the configured k values.
pub fn cmd_recall(cfg: &PipelineConfig, force: bool) -> Result<StageOutcome, CliError> {
    let questions_path = require(cfg, files::QUESTIONS, "genq")?;
    let index_path = require(cfg, files::INDEX, "index")?;
    let ks = cfg.recall_ks();
    let digests = BTreeMap::from([
        file_digest(&questions_path, files::QUESTIONS),
        file_digest(&index_path, files::INDEX),
        params_digest(&[
            ks.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            cfg.seed.to_string(),
            cfg.embedding.backend.clone(),
            cfg.embedding.dims.to_string(),
        ]),
    ]);
    run_stage(cfg, force, "recall", files::RECALL, digests, |out| {
        let pairs: Vec<QAPair> = read_jsonl(&questions_path)?;
        let index = read_index(&index_path)?;
        let embedder = backends::embedder(cfg)?;
        let probes = question_probes(&pairs, embedder.as_ref())?;
        let mut reports: Vec<RecallReport> = Vec::with_capacity(ks.len());
        for &k in &ks {
            let report = recall_at_k(&index, &probes, k)?;
            log::info!("recall@{k}: {:.3} ({}/{})", report.recall, report.hits, report.total_questions);
            reports.push(report);
        }
        write_jsonl(out, &reports)
    })
}

// ---------------------------------------------------------------------------
// ablate

/// Re-measures recall@k as near-duplicate distractors are added in
/// cumulative batches sized by the configured growth factors.
pub fn cmd_ablate(cfg: &PipelineConfig, force: bool) -> Result<StageOutcome, CliError> {
    let questions_path = require(cfg, files::QUESTIONS, "genq")?;
    let index_path = require(cfg, files::INDEX, "index")?;
    let chunks_path = require(cfg, files::CHUNKS, "chunk")?;
    let digests = BTreeMap::from([
        file_digest(&questions_path, files::QUESTIONS),
        file_digest(&index_path, files::INDEX),
        file_digest(&chunks_path, files::CHUNKS),
        params_digest(&[
            cfg.ablation.k.to_string(),
            cfg.ablation
                .growth_factors
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(","),
            cfg.seed.to_string(),
        ]),
    ]);
    run_stage(cfg, force, "ablate", files::ABLATION, digests, |out| {
        let pairs: Vec<QAPair> = read_jsonl(&questions_path)?;
        let base = read_index(&index_path)?;
        let chunks: Vec<Chunk> = read_jsonl(&chunks_path)?;
        let embedder = backends::embedder(cfg)?;
        let probes = question_probes(&pairs, embedder.as_ref())?;
        let batches = distractor_batches(cfg, &base, &chunks, embedder.as_ref())?;
        let points = index_growth_ablation(&base, &batches, &probes, cfg.ablation.k)?;
        let rows: Vec<AblationRow> =
            points.into_iter().map(|point| AblationRow { k: cfg.ablation.k, point }).collect();
        for row in &rows {
            log::info!(
                "ablate: size {} -> recall@{} {:.3}",
                row.point.index_size,
                row.k,
                row.point.recall
            );
        }
        write_jsonl(out, &rows)
    })
}

/// Builds cumulative distractor batches that grow the index to
/// `ceil(base * factor)` per growth factor. Distractors are restatements of
/// real chunks, so they land near the truth in embedding space — the adverse
/// case for retrieval.
fn distractor_batches(
    cfg: &PipelineConfig,
    base: &VectorIndex,
    chunks: &[Chunk],
    embedder: &dyn Embedder,
) -> Result<Vec<Vec<(String, qaforge_core::index::EmbeddingVector)>>, CliError> {
    if chunks.is_empty() {
        return Err(CliError::Other("cannot build distractors from zero chunks".into()));
    }
    let base_size = base.len();
    let mut batches = Vec::with_capacity(cfg.ablation.growth_factors.len());
    let mut current = base_size;
    let mut cursor = 0usize;
    for (b, factor) in cfg.ablation.growth_factors.iter().enumerate() {
        let target = (base_size as f64 * factor).ceil() as usize;
        let mut batch = Vec::new();
        for i in 0..target.saturating_sub(current) {
            let source = &chunks[cursor % chunks.len()];
            cursor += 1;
            let text = format!("{} (restated {b}.{i})", source.text);
            batch.push((format!("distractor#{b}#{i}"), embed(&text, embedder)?));
        }
        current = current.max(target);
        batches.push(batch);
    }
    Ok(batches)
}

// ---------------------------------------------------------------------------
// export-ft

/// Exports answered pairs as prompt/completion fine-tune records.
pub fn cmd_export_ft(cfg: &PipelineConfig, force: bool) -> Result<StageOutcome, CliError> {
    let answers_path = require(cfg, files::ANSWERS, "gena")?;
    let digests = BTreeMap::from([file_digest(&answers_path, files::ANSWERS)]);
    run_stage(cfg, force, "export-ft", files::FINETUNE, digests, |out| {
        let pairs: Vec<QAPair> = read_jsonl(&answers_path)?;
        let summary = export_finetune_dataset(&pairs, out)?;
        log::info!("export-ft: {} written, {} rejected", summary.written, summary.rejected);
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Overrides;

    fn doc_json(doc_id: &str, title: &str, sections: &[(&str, &str)]) -> String {
        let sections: Vec<serde_json::Value> = sections
            .iter()
            .map(|(heading, text)| {
                serde_json::json!({ "title": heading, "content": [text] })
            })
            .collect();
        serde_json::json!({
            "doc_id": doc_id,
            "source": "extension",
            "title": title,
            "sections": sections,
        })
        .to_string()
    }

    /// Two-document corpus with enough text to chunk and generate from.
    fn write_corpus(dir: &Path) -> PathBuf {
        let wheat = doc_json(
            "wa-wheat",
            "Winter Wheat in Washington",
            &[(
                "Planting",
                "Winter wheat across Washington is seeded in September into stored \
                 soil moisture. Growers in Whitman County favor deep furrow drills \
                 when the surface dries out. Stripe rust pressure builds in warm wet \
                 springs, so resistant varieties matter for wheat yields.",
            )],
        );
        let orchard = doc_json(
            "or-orchard",
            "Orchard Care in Oregon",
            &[(
                "Pests",
                "Pear and apple orchards in Hood River depend on careful pruning in \
                 winter. Fire blight spreads quickly through open blossoms during \
                 warm rains, and powdery mildew weakens young apple shoots in Oregon \
                 orchards every humid summer.",
            )],
        );
        std::fs::write(dir.join("wa-wheat.json"), wheat).unwrap();
        std::fs::write(dir.join("or-orchard.json"), orchard).unwrap();
        let manifest = serde_json::json!({
            "corpus_id": "mini-test",
            "entries": [
                { "doc_id": "wa-wheat", "path": "wa-wheat.json", "source": "extension", "region": "WA" },
                { "doc_id": "or-orchard", "path": "or-orchard.json", "source": "extension", "region": "OR" },
            ],
        });
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
        path
    }

    fn test_config(dir: &Path) -> PipelineConfig {
        write_corpus(dir);
        std::fs::write(
            dir.join("config.toml"),
            r#"
offline = true
seed = 11

[corpus]
manifest = "manifest.json"

[chunking]
chunk_tokens = 24
overlap_tokens = 6

[embedding]
dims = 48

[generation]
k = 2

[judge]
metrics = ["fluency", "correctness"]
trials = 3
max_items = 2

[output]
run_dir = "run"
"#,
        )
        .unwrap();
        PipelineConfig::load(&dir.join("config.toml"), &Overrides::default()).unwrap()
    }

    #[test]
    fn jsonl_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.jsonl");
        let rows = vec![
            MetricRow::Overlap { scope: "corpus".into(), value: 0.25, n_questions: 4 },
            MetricRow::Details { scope: "q1".into(), question_tokens: 7, answer_tokens: 30 },
        ];
        write_jsonl(&path, &rows).unwrap();
        let back: Vec<MetricRow> = read_jsonl(&path).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn stages_require_their_upstreams() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = test_config(dir.path());
        let err = cmd_chunk(&cfg, false).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("`qaforge ingest`"));
        let err = cmd_gena(&cfg, false).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn ingest_chunk_index_run_then_skip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = test_config(dir.path());
        assert_eq!(cmd_ingest(&cfg, false).unwrap(), StageOutcome::Ran);
        assert_eq!(cmd_chunk(&cfg, false).unwrap(), StageOutcome::Ran);
        assert_eq!(cmd_index(&cfg, false).unwrap(), StageOutcome::Ran);

        // Unchanged inputs skip; force reruns.
        assert_eq!(cmd_ingest(&cfg, false).unwrap(), StageOutcome::Skipped);
        assert_eq!(cmd_chunk(&cfg, false).unwrap(), StageOutcome::Skipped);
        assert_eq!(cmd_ingest(&cfg, true).unwrap(), StageOutcome::Ran);

        let chunks: Vec<Chunk> = read_jsonl(&cfg.output.run_dir.join(files::CHUNKS)).unwrap();
        assert!(!chunks.is_empty());
        assert!(chunks.iter().all(|c| c.token_count <= 24));
        let index = read_index(&cfg.output.run_dir.join(files::INDEX)).unwrap();
        assert_eq!(index.len(), chunks.len());
    }

    #[test]
    fn external_mode_genq_needs_tags_first() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = test_config(dir.path());
        cmd_ingest(&cfg, false).unwrap();
        cmd_chunk(&cfg, false).unwrap();
        let err = cmd_genq(&cfg, false).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("`qaforge tag`"));
    }

    #[test]
    fn full_stub_pipeline_produces_consistent_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = test_config(dir.path());
        cmd_ingest(&cfg, false).unwrap();
        cmd_chunk(&cfg, false).unwrap();
        cmd_index(&cfg, false).unwrap();
        cmd_tag(&cfg, false).unwrap();
        cmd_genq(&cfg, false).unwrap();
        cmd_gena(&cfg, false).unwrap();
        cmd_metrics(&cfg, false).unwrap();
        cmd_judge(&cfg, false).unwrap();
        cmd_recall(&cfg, false).unwrap();
        cmd_ablate(&cfg, false).unwrap();
        cmd_export_ft(&cfg, false).unwrap();

        let run = cfg.output.run_dir.as_path();
        let pairs: Vec<QAPair> = read_jsonl(&run.join(files::ANSWERS)).unwrap();
        assert!(!pairs.is_empty());
        assert!(pairs.iter().all(|p| p.answer.is_some()));

        // Judgments: 2 pairs x 2 metrics x 3 trials.
        let judgments: Vec<JudgmentRow> = read_jsonl(&run.join(files::JUDGMENTS)).unwrap();
        assert_eq!(judgments.len(), 2 * 2 * 3);
        let variances: Vec<VarianceRow> = read_jsonl(&run.join(files::VARIANCE)).unwrap();
        assert_eq!(variances.len(), 2 * 2);
        assert!(variances.iter().all(|v| v.report.trials.len() == 3));

        // Recall sweep covers the configured ks in order.
        let recalls: Vec<RecallReport> = read_jsonl(&run.join(files::RECALL)).unwrap();
        assert_eq!(
            recalls.iter().map(|r| r.k).collect::<Vec<_>>(),
            cfg.recall_ks()
        );
        assert!(recalls.iter().all(|r| (0.0..=1.0).contains(&r.recall)));

        // Ablation: one point per growth factor plus the base.
        let ablation: Vec<AblationRow> = read_jsonl(&run.join(files::ABLATION)).unwrap();
        assert_eq!(ablation.len(), cfg.ablation.growth_factors.len() + 1);
        let base = read_index(&run.join(files::INDEX)).unwrap().len();
        assert_eq!(ablation[0].point.index_size, base);
        assert_eq!(
            ablation.last().unwrap().point.index_size,
            (base as f64 * 6.8).ceil() as usize
        );

        // Fine-tune export covers all answered pairs.
        let finetune = std::fs::read_to_string(run.join(files::FINETUNE)).unwrap();
        assert_eq!(finetune.lines().count(), pairs.len());

        // Reruns with identical inputs are byte-identical.
        let first = std::fs::read(run.join(files::QUESTIONS)).unwrap();
        cmd_genq(&cfg, true).unwrap();
        let second = std::fs::read(run.join(files::QUESTIONS)).unwrap();
        assert_eq!(first, second);
    }
}
