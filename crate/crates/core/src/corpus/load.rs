//! Document JSON ingestion: lenient parsing with strict provenance.
//!
//! The loader keeps every recognized field typed, stringifies anything else
//! into `metadata`, and derives a stable `doc_id` from the raw bytes when the
//! JSON does not carry one.

use std::collections::BTreeMap;

use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{byte_offset, Citation, CitationAuthor, CorpusError, DocumentRecord, Section};

/// Top-level fields the loader understands; everything else goes to metadata.
const KNOWN_FIELDS: &[&str] = &[
    "doc_id",
    "source",
    "title",
    "language_code",
    "sections",
    "citations",
    "metadata",
];

/// Parses one document from raw JSON bytes.
///
/// Requirements: the JSON must be an object and must carry a string `title`
/// (empty is allowed). `sections` may be absent, empty, or null — never
/// anything but a list of objects otherwise. Unknown top-level fields are
/// preserved, stringified, in [`DocumentRecord::metadata`]. When `doc_id` is
/// absent, the first 16 hex digits of the SHA-256 of the raw bytes are used,
/// prefixed with `doc-`.
pub fn load_document(raw: &[u8]) -> Result<DocumentRecord, CorpusError> {
    let value: Value = serde_json::from_slice(raw).map_err(|e| CorpusError::Parse {
        line: e.line(),
        column: e.column(),
        offset: byte_offset(raw, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| CorpusError::Schema {
        field: "<root>".into(),
        message: "document must be a JSON object".into(),
    })?;

    let title = match obj.get("title") {
        Some(Value::String(s)) => s.clone(),
        Some(other) => {
            return Err(CorpusError::Schema {
                field: "title".into(),
                message: format!("expected a string, found {}", type_name(other)),
            })
        }
        None => {
            return Err(CorpusError::Schema {
                field: "title".into(),
                message: "required field is missing".into(),
            })
        }
    };

    let doc_id = match obj.get("doc_id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        _ => {
            let digest = Sha256::digest(raw);
            format!("doc-{}", hex_prefix(&digest, 16))
        }
    };

    let source = obj
        .get("source")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    let language_code = obj
        .get("language_code")
        .and_then(Value::as_str)
        .map(str::to_string);

    let sections = parse_sections(obj.get("sections"))?;
    let citations = parse_citations(obj.get("citations"))?;

    let mut metadata: BTreeMap<String, String> = BTreeMap::new();
    if let Some(Value::Object(meta)) = obj.get("metadata") {
        for (k, v) in meta {
            metadata.insert(k.clone(), stringify(v));
        }
    }
    for (k, v) in obj {
        if !KNOWN_FIELDS.contains(&k.as_str()) {
            metadata.insert(k.clone(), stringify(v));
        }
    }

    Ok(DocumentRecord {
        doc_id,
        source,
        title,
        language_code,
        sections,
        citations,
        metadata,
    })
}

/// Serializes a document back to its canonical JSON shape (single line).
pub fn serialize_document(doc: &DocumentRecord) -> String {
    serde_json::to_string(doc).expect("document serialization cannot fail")
}

fn parse_sections(value: Option<&Value>) -> Result<Vec<Section>, CorpusError> {
    let list = match value {
        None | Some(Value::Null) => return Ok(Vec::new()),
        Some(Value::Array(items)) => items,
        Some(other) => {
            return Err(CorpusError::Schema {
                field: "sections".into(),
                message: format!("expected a list, found {}", type_name(other)),
            })
        }
    };
    let mut sections = Vec::with_capacity(list.len());
    for (i, item) in list.iter().enumerate() {
        let obj = item.as_object().ok_or_else(|| CorpusError::Schema {
            field: format!("sections[{i}]"),
            message: "expected an object".into(),
        })?;
        let title = match obj.get("title") {
            Some(Value::String(s)) => s.clone(),
            // Absent or null titles normalize to the empty string: section
            // titles must never be null downstream.
            None | Some(Value::Null) => String::new(),
            Some(other) => {
                return Err(CorpusError::Schema {
                    field: format!("sections[{i}].title"),
                    message: format!("expected a string, found {}", type_name(other)),
                })
            }
        };
        let mut content = Vec::new();
        match obj.get("content") {
            None | Some(Value::Null) => {}
            Some(Value::Array(paras)) => {
                for (j, p) in paras.iter().enumerate() {
                    match p {
                        // Empty paragraphs are dropped so the non-empty
                        // invariant holds on the loaded record.
                        Value::String(s) if s.is_empty() => {}
                        Value::String(s) => content.push(s.clone()),
                        other => {
                            return Err(CorpusError::Schema {
                                field: format!("sections[{i}].content[{j}]"),
                                message: format!(
                                    "expected a string, found {}",
                                    type_name(other)
                                ),
                            })
                        }
                    }
                }
            }
            Some(other) => {
                return Err(CorpusError::Schema {
                    field: format!("sections[{i}].content"),
                    message: format!("expected a list, found {}", type_name(other)),
                })
            }
        }
        let refs = match obj.get("refs") {
            None | Some(Value::Null) => Vec::new(),
            Some(Value::Array(items)) => items
                .iter()
                .filter_map(Value::as_str)
                .map(str::to_string)
                .collect(),
            Some(other) => {
                return Err(CorpusError::Schema {
                    field: format!("sections[{i}].refs"),
                    message: format!("expected a list, found {}", type_name(other)),
                })
            }
        };
        // `path` from the input is ignored; position is authoritative.
        sections.push(Section {
            title,
            content,
            refs,
            path: vec![i],
        });
    }
    Ok(sections)
}

fn parse_citations(value: Option<&Value>) -> Result<Vec<Citation>, CorpusError> {
    let list = match value {
        None | Some(Value::Null) => return Ok(Vec::new()),
        Some(Value::Array(items)) => items,
        Some(other) => {
            return Err(CorpusError::Schema {
                field: "citations".into(),
                message: format!("expected a list, found {}", type_name(other)),
            })
        }
    };
    let mut citations = Vec::with_capacity(list.len());
    for (i, item) in list.iter().enumerate() {
        let obj = item.as_object().ok_or_else(|| CorpusError::Schema {
            field: format!("citations[{i}]"),
            message: "expected an object".into(),
        })?;
        let mut c = Citation::default();
        if let Some(Value::Array(authors)) = obj.get("authors") {
            for a in authors {
                if let Some(a) = a.as_object() {
                    c.authors.push(CitationAuthor {
                        given_name: a.get("given_name").and_then(Value::as_str).map(Into::into),
                        surname: a.get("surname").and_then(Value::as_str).map(Into::into),
                        name: a.get("name").and_then(Value::as_str).map(Into::into),
                    });
                }
            }
        }
        c.index = obj.get("index").and_then(Value::as_i64);
        c.id = obj.get("id").and_then(Value::as_str).map(Into::into);
        c.date = obj.get("date").map(stringify_scalar);
        c.title = obj.get("title").and_then(Value::as_str).map(Into::into);
        c.journal = obj.get("journal").and_then(Value::as_str).map(Into::into);
        c.volume = obj.get("volume").map(stringify_scalar);
        c.issue = obj.get("issue").map(stringify_scalar);
        c.pages = obj.get("pages").map(stringify_scalar);
        citations.push(c);
    }
    Ok(citations)
}

/// Compact string form for metadata preservation: strings stay raw, anything
/// else is serialized JSON.
fn stringify(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Scalars that appear as either strings or numbers (dates, volumes, pages).
fn stringify_scalar(v: &Value) -> String {
    stringify(v)
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "a list",
        Value::Object(_) => "an object",
    }
}

fn hex_prefix(bytes: &[u8], hex_len: usize) -> String {
    let mut out = String::with_capacity(hex_len);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
        if out.len() >= hex_len {
            out.truncate(hex_len);
            break;
        }
    }
    out
}
