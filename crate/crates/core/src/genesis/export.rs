//! Fine-tune dataset export.
//!
//! Answered pairs become prompt/completion records with the prompt masked
//! out of the loss (`mask_prompt: true`), so training only optimizes the
//! answer tokens. Unanswered or blank pairs are rejected, not silently
//! skipped: the reject list is part of the export result.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GenesisError, QAPair};

/// One fine-tune training record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FineTuneRecord {
    pub prompt: String,
    pub completion: String,
    /// Always true here: prompts are context, not training signal.
    pub mask_prompt: bool,
}

/// Why a pair was excluded from the export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectRecord {
    pub qa_id: String,
    pub reason: String,
}

/// Outcome tally of one export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportSummary {
    pub written: usize,
    pub rejected: usize,
}

/// Converts pairs to fine-tune records, separating rejects.
pub fn finetune_records(pairs: &[QAPair]) -> (Vec<FineTuneRecord>, Vec<RejectRecord>) {
    let mut records = Vec::with_capacity(pairs.len());
    let mut rejects = Vec::new();
    for pair in pairs {
        if pair.question.trim().is_empty() {
            rejects.push(RejectRecord {
                qa_id: pair.qa_id.clone(),
                reason: "question is blank".into(),
            });
            continue;
        }
        match pair.answer.as_deref().map(str::trim) {
            None => rejects.push(RejectRecord {
                qa_id: pair.qa_id.clone(),
                reason: "no answer".into(),
            }),
            Some("") => rejects.push(RejectRecord {
                qa_id: pair.qa_id.clone(),
                reason: "answer is blank".into(),
            }),
            Some(answer) => records.push(FineTuneRecord {
                prompt: pair.question.trim().to_string(),
                completion: answer.to_string(),
                mask_prompt: true,
            }),
        }
    }
    (records, rejects)
}

/// Writes pairs as JSONL fine-tune records, one per line, plus a reject list
/// alongside (`<path>.rejects.jsonl`) when any pair was excluded.
pub fn export_finetune_dataset(
    pairs: &[QAPair],
    path: &Path,
) -> Result<ExportSummary, GenesisError> {
    let (records, rejects) = finetune_records(pairs);
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    for record in &records {
        serde_json::to_writer(&mut out, record)
            .map_err(|e| GenesisError::InvalidArgument(format!("serialize record: {e}")))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;

    if !rejects.is_empty() {
        let reject_path = path.with_extension("rejects.jsonl");
        let file = File::create(&reject_path)?;
        let mut out = BufWriter::new(file);
        for reject in &rejects {
            serde_json::to_writer(&mut out, reject)
                .map_err(|e| GenesisError::InvalidArgument(format!("serialize reject: {e}")))?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        log::warn!("{} pair(s) rejected during export; see {}", rejects.len(), reject_path.display());
    }
    Ok(ExportSummary { written: records.len(), rejected: rejects.len() })
}

/// Reads a fine-tune JSONL file back into records.
pub fn read_finetune_records(path: &Path) -> Result<Vec<FineTuneRecord>, GenesisError> {
    let file = File::open(path)?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: FineTuneRecord = serde_json::from_str(&line).map_err(|e| {
            GenesisError::InvalidArgument(format!("line {}: {e}", i + 1))
        })?;
        records.push(record);
    }
    Ok(records)
}
