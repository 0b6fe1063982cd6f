//! Section flattening and token-window chunking.
//!
//! A section is flattened to `title\n\nparagraph\n\nparagraph…` and split into
//! windows of `chunk_tokens` word tokens advancing by `chunk_tokens -
//! overlap_tokens`. The final window stops at the section end and may be
//! shorter; every consecutive pair of chunks overlaps exactly
//! `overlap_tokens` tokens. For a section of `n` tokens the number of chunks
//! is `ceil((n - overlap) / (chunk - overlap))` (1 when `0 < n <= overlap`),
//! which [`expected_chunk_count`] exposes for callers and tests.

use crate::text::{token_count, tokenize};

use super::{Chunk, CorpusError, CorpusManifest, CorpusTotals, DocumentRecord, Section};

/// Flattens a section to plain text: the title (when non-empty) followed by
/// each paragraph, separated by blank lines.
pub fn flatten_section(section: &Section) -> String {
    let mut parts: Vec<&str> = Vec::with_capacity(section.content.len() + 1);
    if !section.title.is_empty() {
        parts.push(section.title.as_str());
    }
    for p in &section.content {
        parts.push(p.as_str());
    }
    parts.join("\n\n")
}

/// Closed-form chunk count for a section of `n_tokens` tokens.
pub fn expected_chunk_count(n_tokens: usize, chunk_tokens: usize, overlap_tokens: usize) -> usize {
    if n_tokens == 0 {
        return 0;
    }
    if n_tokens <= overlap_tokens {
        return 1;
    }
    let stride = chunk_tokens - overlap_tokens;
    (n_tokens - overlap_tokens).div_ceil(stride)
}

/// Splits one section into overlapping token-window chunks.
///
/// Parameters must satisfy `chunk_tokens >= 1` and `overlap_tokens <
/// chunk_tokens`. An empty section yields no chunks. Chunk ids are
/// `{doc_id}#s{path}#c{i}` with `path` dot-joined; `char_span` holds byte
/// offsets into the flattened text such that re-slicing reproduces `text`.
pub fn chunk_section(
    doc_id: &str,
    section: &Section,
    chunk_tokens: usize,
    overlap_tokens: usize,
) -> Result<Vec<Chunk>, CorpusError> {
    validate_params(chunk_tokens, overlap_tokens)?;
    let flattened = flatten_section(section);
    let tokens = tokenize(&flattened);
    let n = tokens.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let stride = chunk_tokens - overlap_tokens;
    let path_label = section
        .path
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(".");

    let mut chunks = Vec::with_capacity(expected_chunk_count(n, chunk_tokens, overlap_tokens));
    let mut start_tok = 0usize;
    loop {
        let end_tok = (start_tok + chunk_tokens).min(n);
        let span = (tokens[start_tok].start, tokens[end_tok - 1].end);
        let text = flattened[span.0..span.1].to_string();
        chunks.push(Chunk {
            chunk_id: format!("{doc_id}#s{path_label}#c{}", chunks.len()),
            doc_id: doc_id.to_string(),
            section_path: section.path.clone(),
            char_span: span,
            token_count: end_tok - start_tok,
            text,
        });
        if end_tok == n {
            break;
        }
        start_tok += stride;
    }
    Ok(chunks)
}

/// Chunks every section of a document, in section order.
pub fn chunk_document(
    doc: &DocumentRecord,
    chunk_tokens: usize,
    overlap_tokens: usize,
) -> Result<Vec<Chunk>, CorpusError> {
    validate_params(chunk_tokens, overlap_tokens)?;
    let mut all = Vec::new();
    for section in &doc.sections {
        all.extend(chunk_section(&doc.doc_id, section, chunk_tokens, overlap_tokens)?);
    }
    Ok(all)
}

/// Computes corpus totals and cross-checks them against the manifest.
///
/// Tokens are counted over each document's flattened sections (section titles
/// included, document titles not). Errors if the manifest entry count or ids
/// disagree with the documents supplied.
pub fn corpus_stats(
    manifest: &CorpusManifest,
    docs: &[DocumentRecord],
) -> Result<CorpusTotals, CorpusError> {
    if manifest.entries.len() != docs.len() {
        return Err(CorpusError::ManifestMismatch(format!(
            "manifest lists {} documents but {} were loaded",
            manifest.entries.len(),
            docs.len()
        )));
    }
    for entry in &manifest.entries {
        if !docs.iter().any(|d| d.doc_id == entry.doc_id) {
            return Err(CorpusError::ManifestMismatch(format!(
                "manifest entry `{}` has no loaded document",
                entry.doc_id
            )));
        }
    }
    let tokens = docs
        .iter()
        .map(|d| {
            d.sections
                .iter()
                .map(|s| token_count(&flatten_section(s)))
                .sum::<usize>()
        })
        .sum();
    Ok(CorpusTotals {
        documents: docs.len(),
        tokens,
    })
}

/// Reconstructs the contiguous flattened-section slice covered by `chunks`.
///
/// Chunks must belong to one document section, be ordered by span start, and
/// overlap or touch (no gaps). Because every chunk text is a literal slice of
/// the same flattened text, splicing on the span overlaps reproduces
/// `flattened[first.start .. last.end]` byte for byte — which is how
/// downstream provenance checks verify that a set of chunk ids really covers
/// the text a question was generated from.
pub fn splice_chunks(chunks: &[Chunk]) -> Result<String, CorpusError> {
    let first = chunks.first().ok_or_else(|| {
        CorpusError::BadChunkParams("cannot splice zero chunks".into())
    })?;
    let mut spliced = first.text.clone();
    for pair in chunks.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        if cur.doc_id != prev.doc_id || cur.section_path != prev.section_path {
            return Err(CorpusError::BadChunkParams(format!(
                "chunks `{}` and `{}` come from different sections",
                prev.chunk_id, cur.chunk_id
            )));
        }
        let (_, prev_end) = prev.char_span;
        let (cur_start, _) = cur.char_span;
        if cur_start > prev_end {
            return Err(CorpusError::BadChunkParams(format!(
                "gap between chunks `{}` and `{}`",
                prev.chunk_id, cur.chunk_id
            )));
        }
        let overlap_bytes = prev_end - cur_start;
        if overlap_bytes > cur.text.len() {
            return Err(CorpusError::BadChunkParams(format!(
                "chunk `{}` lies entirely inside `{}`",
                cur.chunk_id, prev.chunk_id
            )));
        }
        spliced.push_str(&cur.text[overlap_bytes..]);
    }
    Ok(spliced)
}

fn validate_params(chunk_tokens: usize, overlap_tokens: usize) -> Result<(), CorpusError> {
    if chunk_tokens == 0 {
        return Err(CorpusError::BadChunkParams(
            "chunk_tokens must be at least 1".into(),
        ));
    }
    if overlap_tokens >= chunk_tokens {
        return Err(CorpusError::BadChunkParams(format!(
            "overlap_tokens ({overlap_tokens}) must be smaller than chunk_tokens ({chunk_tokens})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ManifestEntry, Section};

    /// A section whose flattened text has exactly `n` word tokens.
    fn section_with_tokens(n: usize) -> Section {
        Section {
            title: String::new(),
            content: vec![(0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")],
            refs: vec![],
            path: vec![0],
        }
    }

    #[test]
    fn flatten_joins_title_and_paragraphs() {
        let s = Section {
            title: "Irrigation".into(),
            content: vec!["First paragraph.".into(), "Second paragraph.".into()],
            refs: vec![],
            path: vec![2],
        };
        assert_eq!(
            flatten_section(&s),
            "Irrigation\n\nFirst paragraph.\n\nSecond paragraph."
        );
    }

    #[test]
    fn thousand_token_section_default_params() {
        let s = section_with_tokens(1000);
        let chunks = chunk_section("d", &s, 400, 100).unwrap();
        assert_eq!(chunks.len(), expected_chunk_count(1000, 400, 100));
        assert_eq!(chunks.len(), 3);
        let counts: Vec<usize> = chunks.iter().map(|c| c.token_count).collect();
        assert_eq!(counts, vec![400, 400, 400]);
        // Starts advance by the stride: tokens 0, 300, 600.
        let flattened = flatten_section(&s);
        let toks = tokenize(&flattened);
        assert_eq!(chunks[0].char_span.0, toks[0].start);
        assert_eq!(chunks[1].char_span.0, toks[300].start);
        assert_eq!(chunks[2].char_span.0, toks[600].start);
    }

    #[test]
    fn spans_reslice_to_chunk_text() {
        let s = Section {
            title: "Soil".into(),
            content: vec![
                "Cover crops protect the soil surface, feed microbes, and break pest cycles."
                    .into(),
                "Rotations with legumes add nitrogen; deep roots improve water infiltration."
                    .into(),
            ],
            refs: vec![],
            path: vec![1],
        };
        let flattened = flatten_section(&s);
        for chunk in chunk_section("doc9", &s, 7, 3).unwrap() {
            assert_eq!(chunk.text, &flattened[chunk.char_span.0..chunk.char_span.1]);
            assert_eq!(chunk.token_count, token_count(&chunk.text));
        }
    }

    #[test]
    fn consecutive_chunks_overlap_exactly() {
        let s = section_with_tokens(47);
        let chunk_tokens = 10;
        let overlap = 4;
        let chunks = chunk_section("d", &s, chunk_tokens, overlap).unwrap();
        assert_eq!(chunks.len(), expected_chunk_count(47, chunk_tokens, overlap));
        let flattened = flatten_section(&s);
        let toks = tokenize(&flattened);
        // Token index of each chunk start.
        let starts: Vec<usize> = chunks
            .iter()
            .map(|c| toks.iter().position(|t| t.start == c.char_span.0).unwrap())
            .collect();
        for w in starts.windows(2) {
            assert_eq!(w[1] - w[0], chunk_tokens - overlap);
        }
        // Full token coverage: last chunk ends at the last token.
        assert_eq!(chunks.last().unwrap().char_span.1, toks.last().unwrap().end);
    }

    #[test]
    fn short_section_yields_single_chunk() {
        let s = section_with_tokens(5);
        let chunks = chunk_section("d", &s, 400, 100).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].token_count, 5);
        assert_eq!(chunks[0].chunk_id, "d#s0#c0");
    }

    #[test]
    fn empty_section_yields_no_chunks() {
        let s = Section::default();
        assert!(chunk_section("d", &s, 400, 100).unwrap().is_empty());
    }

    #[test]
    fn bad_params_are_rejected() {
        let s = section_with_tokens(10);
        assert!(chunk_section("d", &s, 0, 0).is_err());
        assert!(chunk_section("d", &s, 100, 100).is_err());
        assert!(chunk_section("d", &s, 100, 250).is_err());
    }

    #[test]
    fn chunk_ids_carry_section_path() {
        let mut s = section_with_tokens(25);
        s.path = vec![3];
        let chunks = chunk_section("docA", &s, 10, 2).unwrap();
        assert!(chunks.iter().enumerate().all(|(i, c)| {
            c.chunk_id == format!("docA#s3#c{i}") && c.section_path == vec![3]
        }));
    }

    #[test]
    fn stats_match_manifest() {
        let doc = DocumentRecord {
            doc_id: "d1".into(),
            title: "t".into(),
            sections: vec![section_with_tokens(12), section_with_tokens(8)],
            ..Default::default()
        };
        let manifest = CorpusManifest {
            corpus_id: "c".into(),
            entries: vec![ManifestEntry {
                doc_id: "d1".into(),
                path: "d1.json".into(),
                source: String::new(),
                region: String::new(),
            }],
            totals: CorpusTotals::default(),
        };
        let totals = corpus_stats(&manifest, &[doc]).unwrap();
        assert_eq!(totals.documents, 1);
        assert_eq!(totals.tokens, 20);
    }

    #[test]
    fn splicing_reconstructs_the_flattened_text() {
        let s = Section {
            title: "Grazing".into(),
            content: vec![
                "Rotational grazing rests paddocks so forage regrows before cattle return."
                    .into(),
                "Stocking rates depend on rainfall, forage species, and season length.".into(),
            ],
            refs: vec![],
            path: vec![0],
        };
        let flattened = flatten_section(&s);
        let toks = tokenize(&flattened);
        let chunks = chunk_section("d", &s, 6, 2).unwrap();
        assert!(chunks.len() > 2);
        let spliced = splice_chunks(&chunks).unwrap();
        assert_eq!(
            spliced,
            &flattened[toks.first().unwrap().start..toks.last().unwrap().end]
        );
    }

    #[test]
    fn splicing_rejects_gaps() {
        let s = section_with_tokens(30);
        let chunks = chunk_section("d", &s, 10, 2).unwrap();
        let gappy = vec![chunks[0].clone(), chunks[2].clone()];
        assert!(splice_chunks(&gappy).is_err());
        assert!(splice_chunks(&[]).is_err());
    }

    #[test]
    fn stats_reject_mismatched_manifest() {
        let manifest = CorpusManifest {
            corpus_id: "c".into(),
            entries: vec![],
            totals: CorpusTotals::default(),
        };
        let doc = DocumentRecord {
            doc_id: "d1".into(),
            title: "t".into(),
            ..Default::default()
        };
        assert!(corpus_stats(&manifest, &[doc]).is_err());
    }
}
