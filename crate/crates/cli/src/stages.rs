//! Stage artifacts: completion markers, input digests, and resume logic.
//!
//! Every command writes exactly one marker under `<run_dir>/stages/` naming
//! its inputs (as SHA-256 digests) and its primary output file. A stage
//! reruns iff the marker is absent or any input digest changed; otherwise it
//! is skipped, which makes whole pipeline reruns cheap and safe. Timestamps
//! never enter markers or stage outputs — they live only in `run.log` — so
//! two runs from identical inputs are byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Canonical stage output file names inside a run directory.
pub mod files {
    pub const DOCUMENTS: &str = "documents.jsonl";
    pub const CHUNKS: &str = "chunks.jsonl";
    pub const INDEX: &str = "index.jsonl";
    pub const TAGS: &str = "tags.jsonl";
    pub const QUESTIONS: &str = "questions.jsonl";
    pub const ANSWERS: &str = "answers.jsonl";
    pub const METRICS: &str = "metrics.jsonl";
    pub const JUDGMENTS: &str = "judgments.jsonl";
    pub const VARIANCE: &str = "variance.jsonl";
    pub const RECALL: &str = "recall.jsonl";
    pub const ABLATION: &str = "ablation.jsonl";
    pub const FINETUNE: &str = "finetune.jsonl";
    pub const REPORT: &str = "report.md";
}

/// One stage's completion record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageArtifact {
    pub stage: String,
    /// Input name → SHA-256 hex digest (or an `absent:` sentinel).
    pub input_digests: BTreeMap<String, String>,
    /// Primary output file, relative to the run directory.
    pub output_path: String,
}

/// Whether a stage ran or was skipped as already up to date.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOutcome {
    Ran,
    Skipped,
}

/// SHA-256 hex of arbitrary bytes.
pub fn digest_bytes(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of a file's contents; missing files get a stable sentinel so an
/// input appearing or disappearing both count as changes.
pub fn digest_file(path: &Path) -> String {
    match fs::read(path) {
        Ok(bytes) => digest_bytes(&bytes),
        Err(_) => format!("absent:{}", path.display()),
    }
}

/// Digest of a config-derived parameter string.
pub fn digest_params(parts: &[String]) -> String {
    digest_bytes(parts.join("\u{1f}").as_bytes())
}

fn marker_path(run_dir: &Path, stage: &str) -> PathBuf {
    run_dir.join("stages").join(format!("{stage}.json"))
}

/// Reads a stage marker if present.
pub fn read_marker(run_dir: &Path, stage: &str) -> Option<StageArtifact> {
    let raw = fs::read(marker_path(run_dir, stage)).ok()?;
    serde_json::from_slice(&raw).ok()
}

/// Writes a stage marker (atomically: temp file + rename).
pub fn write_marker(run_dir: &Path, artifact: &StageArtifact) -> Result<(), CliError> {
    let path = marker_path(run_dir, &artifact.stage);
    fs::create_dir_all(path.parent().expect("marker path has a parent"))?;
    let tmp = path.with_extension("json.tmp");
    let mut file = fs::File::create(&tmp)?;
    serde_json::to_writer_pretty(&mut file, artifact)
        .map_err(|e| CliError::Other(format!("serialize marker: {e}")))?;
    file.write_all(b"\n")?;
    file.sync_all()?;
    fs::rename(&tmp, &path)?;
    Ok(())
}

/// True when the stage's marker exists, matches `input_digests`, and its
/// output file is still present.
pub fn up_to_date(
    run_dir: &Path,
    stage: &str,
    input_digests: &BTreeMap<String, String>,
) -> bool {
    match read_marker(run_dir, stage) {
        Some(marker) => {
            marker.input_digests == *input_digests
                && run_dir.join(&marker.output_path).is_file()
        }
        None => false,
    }
}

/// Returns the path of an upstream artifact, or the dependency error naming
/// the command that produces it.
pub fn require_artifact(
    run_dir: &Path,
    file: &str,
    produced_by: &str,
) -> Result<PathBuf, CliError> {
    let path = run_dir.join(file);
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::Dependency { missing: file.to_string(), command: produced_by.to_string() })
    }
}

/// Appends one line to the run log; the only place timestamps exist.
pub fn log_stage(run_dir: &Path, stage: &str, outcome: StageOutcome) {
    let unix_secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let line = format!(
        "{unix_secs} {stage} {}\n",
        match outcome {
            StageOutcome::Ran => "ran",
            StageOutcome::Skipped => "skipped",
        }
    );
    if let Ok(mut file) =
        fs::OpenOptions::new().create(true).append(true).open(run_dir.join("run.log"))
    {
        let _ = file.write_all(line.as_bytes());
    }
}
