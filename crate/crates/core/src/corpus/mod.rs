//! Corpus ingestion and chunking.
//!
//! Documents arrive as GROBID-style JSON (version/language headers, a citation
//! list, and an ordered list of sections whose `content` is a list of
//! paragraph strings). [`load_document`] tolerates unknown fields — anything
//! unrecognized at the top level is preserved in [`DocumentRecord::metadata`]
//! — so newer extractor output still loads. Sections are flattened to plain
//! text and split into overlapping token windows by [`chunk_document`]; every
//! [`Chunk`] records its provenance (document id, section path, byte span)
//! precisely enough that re-slicing the flattened section text reproduces the
//! chunk text byte for byte.

mod chunker;
mod load;

pub use chunker::{
    chunk_document, chunk_section, corpus_stats, expected_chunk_count, flatten_section,
    splice_chunks,
};
pub use load::{load_document, serialize_document};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors produced while loading, validating, or chunking corpus data.
#[derive(Debug, Error)]
pub enum CorpusError {
    /// The raw bytes were not valid JSON. Offsets locate the failure.
    #[error("malformed JSON at line {line}, column {column} (byte {offset}): {message}")]
    Parse {
        line: usize,
        column: usize,
        offset: usize,
        message: String,
    },
    /// The JSON was well formed but a required field is missing or mistyped.
    #[error("document schema error: field `{field}`: {message}")]
    Schema { field: String, message: String },
    /// Invalid chunking parameters.
    #[error("invalid chunking parameters: {0}")]
    BadChunkParams(String),
    /// A manifest entry disagrees with the loaded documents.
    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),
    /// Filesystem-level failure while reading corpus files.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One author of a cited work. All fields optional; extractors disagree.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationAuthor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub given_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surname: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// A bibliographic reference attached to a document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Citation {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub authors: Vec<CitationAuthor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    /// Publication year (kept as a string; sources are inconsistent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub journal: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub issue: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pages: Option<String>,
}

/// One section of a document: a title, ordered paragraphs, reference keys,
/// and its position in the document (`path`).
///
/// Invariants (enforced by [`load_document`]): `title` is never null (an
/// empty string is fine) and every `content` paragraph is a non-empty string.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub content: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refs: Vec<String>,
    /// Index path of this section inside the document (currently one level:
    /// `[i]` for the i-th section). Assigned at load time.
    #[serde(default)]
    pub path: Vec<usize>,
}

/// A parsed document: identity, provenance, sections, and citations.
///
/// `metadata` holds any top-level JSON fields the loader did not recognize
/// (stringified), so round-tripping through [`serialize_document`] is lossless
/// for practical purposes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doc_id: String,
    /// Originating collection or publisher (e.g. an extension program name).
    #[serde(default)]
    pub source: String,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language_code: Option<String>,
    #[serde(default)]
    pub sections: Vec<Section>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub citations: Vec<Citation>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

/// A contiguous token window cut from one section's flattened text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    /// Stable id: `{doc_id}#s{section path}#c{index}`.
    pub chunk_id: String,
    pub doc_id: String,
    pub section_path: Vec<usize>,
    /// Byte offsets `(start, end)` into the flattened section text; offsets
    /// fall on token boundaries, and `text == flattened[start..end]`.
    pub char_span: (usize, usize),
    pub text: String,
    /// Word-token count of `text` (see [`crate::text::token_count`]).
    pub token_count: usize,
}

/// One corpus-manifest row: where a document lives and how it is labeled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub doc_id: String,
    pub path: String,
    #[serde(default)]
    pub source: String,
    /// Geographic tag used by cross-region analysis (e.g. a state name).
    #[serde(default)]
    pub region: String,
}

/// Corpus-wide totals; recomputable from the documents themselves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusTotals {
    pub documents: usize,
    pub tokens: usize,
}

/// A corpus manifest: id, per-document entries, and totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub corpus_id: String,
    pub entries: Vec<ManifestEntry>,
    #[serde(default)]
    pub totals: CorpusTotals,
}

impl CorpusManifest {
    /// Parses a manifest from JSON bytes.
    pub fn from_json(raw: &[u8]) -> Result<Self, CorpusError> {
        serde_json::from_slice(raw).map_err(|e| CorpusError::Parse {
            line: e.line(),
            column: e.column(),
            offset: byte_offset(raw, e.line(), e.column()),
            message: e.to_string(),
        })
    }

    /// Reads and parses a manifest file.
    pub fn from_path(path: &std::path::Path) -> Result<Self, CorpusError> {
        let raw = std::fs::read(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&raw)
    }

    /// Looks up the region tag for a document id, if any.
    pub fn region_of(&self, doc_id: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.doc_id == doc_id)
            .map(|e| e.region.as_str())
    }
}

/// Converts serde's 1-based line/column into a byte offset into `raw`.
pub(crate) fn byte_offset(raw: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut seen_lines = 1usize;
    let mut offset = 0usize;
    for (i, b) in raw.iter().enumerate() {
        if seen_lines == line {
            offset = i;
            break;
        }
        if *b == b'\n' {
            seen_lines += 1;
            offset = i + 1;
        }
    }
    offset + column.saturating_sub(1)
}
