//! Index persistence: a JSON header line followed by one JSONL row per entry.
//!
//! ```text
//! {"dims":64,"metric":"cosine","count":2}
//! {"chunk_id":"doc1#s0#c0","values":[…]}
//! {"chunk_id":"doc1#s0#c1","values":[…]}
//! ```
//!
//! Values round-trip exactly (serde_json emits shortest-round-trip floats),
//! so an index rebuilt from disk returns bit-identical search results.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{EmbeddingVector, IndexError, VectorIndex};

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    dims: usize,
    metric: String,
    count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row<'a> {
    chunk_id: &'a str,
    values: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct OwnedRow {
    chunk_id: String,
    values: Vec<f64>,
}

/// Writes the index (header + entries in ascending chunk-id order).
pub fn save_index(index: &VectorIndex, mut writer: impl Write) -> Result<(), IndexError> {
    let header = Header {
        dims: index.dims(),
        metric: "cosine".into(),
        count: index.len(),
    };
    writeln!(
        writer,
        "{}",
        serde_json::to_string(&header).expect("header serializes")
    )?;
    for (chunk_id, vector) in index.iter() {
        let row = Row {
            chunk_id,
            values: vector.values().to_vec(),
        };
        writeln!(
            writer,
            "{}",
            serde_json::to_string(&row).expect("row serializes")
        )?;
    }
    Ok(())
}

/// Reads an index written by [`save_index`], validating header agreement.
pub fn load_index(reader: impl BufRead) -> Result<VectorIndex, IndexError> {
    let mut lines = reader.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| IndexError::Corrupt("file is empty (no header)".into()))??;
    let header: Header = serde_json::from_str(&header_line)
        .map_err(|e| IndexError::Corrupt(format!("bad header: {e}")))?;
    if header.metric != "cosine" {
        return Err(IndexError::Corrupt(format!(
            "unsupported metric `{}`",
            header.metric
        )));
    }
    let mut index = VectorIndex::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: OwnedRow = serde_json::from_str(&line)
            .map_err(|e| IndexError::Corrupt(format!("bad row {}: {e}", i + 1)))?;
        if row.values.len() != header.dims {
            return Err(IndexError::Corrupt(format!(
                "row {} has {} dims, header says {}",
                i + 1,
                row.values.len(),
                header.dims
            )));
        }
        index.insert(row.chunk_id, EmbeddingVector::new(row.values)?)?;
    }
    if index.len() != header.count {
        return Err(IndexError::Corrupt(format!(
            "header count {} but {} rows loaded",
            header.count,
            index.len()
        )));
    }
    Ok(index)
}
