//! The report stage: `report.md` plus one CSV per table.
//!
//! Every number here is an aggregate of rows persisted by earlier stages —
//! nothing is carried over from in-memory state, so an independent script
//! reading the same JSONL files must reproduce the report exactly. Absent
//! stage files render as header-only tables rather than errors, so a report
//! can be cut at any point mid-pipeline.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;

use qaforge_core::corpus::{Chunk, DocumentRecord};
use qaforge_core::genesis::QAPair;
use qaforge_core::index::{
    ablation_csv, ablation_markdown, recall_csv, recall_markdown, AblationPoint, RecallReport,
};
use qaforge_core::judge::{aggregate_report, metrics_csv, metrics_markdown, JudgeVerdict};

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::pipeline::{
    read_jsonl, run_stage, write_atomic, AblationRow, JudgmentRow, MetricRow, VarianceRow,
};
use crate::stages::{self, files, StageOutcome};

/// CSV file names, one per report table.
pub mod csv_files {
    pub const DATASET: &str = "dataset.csv";
    pub const TEXTMETRICS: &str = "textmetrics.csv";
    pub const RECALL: &str = "recall.csv";
    pub const ABLATION: &str = "ablation.csv";
    pub const JUDGE: &str = "judge.csv";
    pub const VARIANCE: &str = "variance.csv";
}

/// Stage files the report reads; their digests gate report reruns.
const REPORT_INPUTS: &[&str] = &[
    files::DOCUMENTS,
    files::CHUNKS,
    files::QUESTIONS,
    files::ANSWERS,
    files::METRICS,
    files::JUDGMENTS,
    files::VARIANCE,
    files::RECALL,
    files::ABLATION,
    files::FINETUNE,
];

/// Renders `report.md` and the CSV bundle from whatever stage files exist.
pub fn cmd_report(cfg: &PipelineConfig, force: bool) -> Result<StageOutcome, CliError> {
    let run_dir = cfg.output.run_dir.clone();
    let digests: BTreeMap<String, String> = REPORT_INPUTS
        .iter()
        .map(|file| (file.to_string(), stages::digest_file(&run_dir.join(file))))
        .collect();
    run_stage(cfg, force, "report", files::REPORT, digests, |out| {
        let bundle = build_report(&run_dir)?;
        for (name, csv) in &bundle.csv_tables {
            write_atomic(&run_dir.join(name), csv.as_bytes())?;
        }
        write_atomic(out, bundle.markdown.as_bytes())
    })
}

/// A rendered report: the Markdown body and each table as CSV.
pub struct ReportBundle {
    pub markdown: String,
    /// `(file name, csv content)`, one per table.
    pub csv_tables: Vec<(&'static str, String)>,
}

/// Reads a stage file; `None` when the stage has not produced it, so an
/// absent stage renders header-only rather than as a row of zeros.
fn load_rows<T: DeserializeOwned>(
    run_dir: &Path,
    file: &str,
) -> Result<Option<Vec<T>>, CliError> {
    let path = run_dir.join(file);
    if path.is_file() {
        read_jsonl(&path).map(Some)
    } else {
        Ok(None)
    }
}

fn count_lines(run_dir: &Path, file: &str) -> Option<usize> {
    std::fs::read_to_string(run_dir.join(file))
        .map(|s| s.lines().filter(|l| !l.trim().is_empty()).count())
        .ok()
}

/// Builds the whole report from the stage files under `run_dir`.
pub fn build_report(run_dir: &Path) -> Result<ReportBundle, CliError> {
    let docs: Option<Vec<DocumentRecord>> = load_rows(run_dir, files::DOCUMENTS)?;
    let chunks: Option<Vec<Chunk>> = load_rows(run_dir, files::CHUNKS)?;
    let questions: Option<Vec<QAPair>> = load_rows(run_dir, files::QUESTIONS)?;
    let answers: Option<Vec<QAPair>> = load_rows(run_dir, files::ANSWERS)?;
    let metrics: Vec<MetricRow> = load_rows(run_dir, files::METRICS)?.unwrap_or_default();
    let judgments: Vec<JudgmentRow> = load_rows(run_dir, files::JUDGMENTS)?.unwrap_or_default();
    let variance: Vec<VarianceRow> = load_rows(run_dir, files::VARIANCE)?.unwrap_or_default();
    let recall: Vec<RecallReport> = load_rows(run_dir, files::RECALL)?.unwrap_or_default();
    let ablation: Vec<AblationRow> = load_rows(run_dir, files::ABLATION)?.unwrap_or_default();
    let finetune_records = count_lines(run_dir, files::FINETUNE);

    let dataset = dataset_table(
        docs.as_deref(),
        chunks.as_deref(),
        questions.as_deref(),
        answers.as_deref(),
        finetune_records,
    );
    let textmetrics = textmetrics_table(&metrics);
    let verdicts: Vec<JudgeVerdict> = judgments.into_iter().map(|j| j.verdict).collect();
    let judge_summaries = aggregate_report(&verdicts);
    let spread = variance_table(&variance);
    let ablation_points: Vec<AblationPoint> =
        ablation.iter().map(|row| row.point.clone()).collect();
    let ablation_k = ablation.first().map(|row| row.k);

    let mut md = String::from("# Pipeline report\n\n");
    md.push_str("## Dataset\n\n");
    md.push_str(&dataset.markdown);
    md.push_str("\n## Text metrics\n\n");
    md.push_str(&textmetrics.markdown);
    md.push_str("\n## Retrieval\n\n### Recall by top-k\n\n");
    md.push_str(&recall_markdown(&recall));
    match ablation_k {
        Some(k) => md.push_str(&format!("\n### Recall@{k} as the index grows\n\n")),
        None => md.push_str("\n### Recall as the index grows\n\n"),
    }
    md.push_str(&ablation_markdown(&ablation_points));
    md.push_str("\n## Judge\n\n### Scores\n\n");
    md.push_str(&metrics_markdown(&judge_summaries));
    md.push_str("\n### Trial spread\n\n");
    md.push_str(&spread.markdown);

    let csv_tables = vec![
        (csv_files::DATASET, dataset.csv),
        (csv_files::TEXTMETRICS, textmetrics.csv),
        (csv_files::RECALL, recall_csv(&recall)),
        (csv_files::ABLATION, ablation_csv(&ablation_points)),
        (csv_files::JUDGE, metrics_csv(&judge_summaries)),
        (csv_files::VARIANCE, spread.csv),
    ];
    Ok(ReportBundle { markdown: md, csv_tables })
}

struct Table {
    markdown: String,
    csv: String,
}

fn dataset_table(
    docs: Option<&[DocumentRecord]>,
    chunks: Option<&[Chunk]>,
    questions: Option<&[QAPair]>,
    answers: Option<&[QAPair]>,
    finetune_records: Option<usize>,
) -> Table {
    let mut rows: Vec<(&str, String)> = Vec::new();
    if let Some(docs) = docs {
        let sections: usize = docs.iter().map(|d| d.sections.len()).sum();
        rows.push(("documents", docs.len().to_string()));
        rows.push(("sections", sections.to_string()));
    }
    if let Some(chunks) = chunks {
        rows.push(("chunks", chunks.len().to_string()));
    }
    if let Some(questions) = questions {
        rows.push(("questions", questions.len().to_string()));
        let questioned_sections: std::collections::BTreeSet<(String, Vec<usize>)> = questions
            .iter()
            .map(|p| (p.doc_id.clone(), p.section_path.clone()))
            .collect();
        if !questioned_sections.is_empty() {
            let mean = questions.len() as f64 / questioned_sections.len() as f64;
            rows.push(("sections_with_questions", questioned_sections.len().to_string()));
            rows.push(("mean_questions_per_section", format!("{mean:.4}")));
        }
    }
    if let Some(answers) = answers {
        let answered = answers.iter().filter(|p| p.answer.is_some()).count();
        rows.push(("answered", answered.to_string()));
    }
    if let Some(n) = finetune_records {
        rows.push(("finetune_records", n.to_string()));
    }

    let mut markdown = String::from("| Item | Value |\n|---|---:|\n");
    let mut csv = String::from("item,value\n");
    for (item, value) in &rows {
        markdown.push_str(&format!("| {item} | {value} |\n"));
        csv.push_str(&format!("{item},{value}\n"));
    }
    Table { markdown, csv }
}

fn textmetrics_table(metrics: &[MetricRow]) -> Table {
    let mut rows: Vec<(String, String, f64, usize)> = Vec::new();
    let mut question_tokens = 0usize;
    let mut answer_tokens = 0usize;
    let mut detail_pairs = 0usize;
    for row in metrics {
        match row {
            MetricRow::Overlap { scope, value, n_questions } => {
                rows.push(("overlap_kl".to_string(), scope.clone(), *value, *n_questions));
            }
            MetricRow::Diversity { scope, value, n_questions } => {
                rows.push(("diversity_wmd".to_string(), scope.clone(), *value, *n_questions));
            }
            MetricRow::Details { question_tokens: q, answer_tokens: a, .. } => {
                question_tokens += q;
                answer_tokens += a;
                detail_pairs += 1;
            }
        }
    }
    if detail_pairs > 0 {
        rows.push((
            "mean_question_tokens".to_string(),
            "corpus".to_string(),
            question_tokens as f64 / detail_pairs as f64,
            detail_pairs,
        ));
        rows.push((
            "mean_answer_tokens".to_string(),
            "corpus".to_string(),
            answer_tokens as f64 / detail_pairs as f64,
            detail_pairs,
        ));
    }

    let mut markdown = String::from("| Metric | Scope | Value | N |\n|---|---|---:|---:|\n");
    let mut csv = String::from("metric,scope,value,n\n");
    for (metric, scope, value, n) in &rows {
        markdown.push_str(&format!("| {metric} | {scope} | {value:.4} | {n} |\n"));
        csv.push_str(&format!("{metric},{scope},{value:.6},{n}\n"));
    }
    Table { markdown, csv }
}

fn variance_table(variance: &[VarianceRow]) -> Table {
    // metric -> (pairs, trial means, trial stddevs), in first-seen order.
    let mut order: Vec<&str> = Vec::new();
    let mut grouped: BTreeMap<&str, (usize, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for row in variance {
        let metric = row.report.metric_name.as_str();
        let entry = grouped.entry(metric).or_insert_with(|| {
            order.push(metric);
            (0, Vec::new(), Vec::new())
        });
        entry.0 += 1;
        if let Some(mean) = row.report.mean {
            entry.1.push(mean);
        }
        if let Some(stddev) = row.report.stddev {
            entry.2.push(stddev);
        }
    }

    let avg = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let mut markdown = String::from(
        "| Metric | Pairs | Mean of trial means | Mean trial stddev |\n|---|---:|---:|---:|\n",
    );
    let mut csv = String::from("metric,pairs,mean_of_means,mean_stddev\n");
    for metric in order {
        let (pairs, means, stddevs) = &grouped[metric];
        let dash = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        let blank = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        markdown.push_str(&format!(
            "| {metric} | {pairs} | {} | {} |\n",
            dash(avg(means)),
            dash(avg(stddevs))
        ));
        csv.push_str(&format!(
            "{metric},{pairs},{},{}\n",
            blank(avg(means)),
            blank(avg(stddevs))
        ));
    }
    Table { markdown, csv }
}
