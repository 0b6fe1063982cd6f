//! Word tokenization shared by chunking, token counting, and the text metrics.
//!
//! A token is a maximal run of alphanumeric characters; everything else
//! (whitespace and punctuation) separates tokens. This single definition is
//! used everywhere a "word" is counted so chunk sizes, distributions, and
//! detail counts all agree with each other.

/// A token together with its byte span in the source text.
///
/// Spans always lie on UTF-8 boundaries (they delimit alphanumeric runs), so
/// `&source[start..end]` is exactly the token text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Token text as it appears in the source (original casing).
    pub text: String,
    /// Byte offset of the first byte of the token.
    pub start: usize,
    /// Byte offset one past the last byte of the token.
    pub end: usize,
}

/// Splits `text` into tokens: maximal alphanumeric runs with byte spans.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (idx, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if start.is_none() {
                start = Some(idx);
            }
        } else if let Some(s) = start.take() {
            tokens.push(Token {
                text: text[s..idx].to_string(),
                start: s,
                end: idx,
            });
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: text[s..].to_string(),
            start: s,
            end: text.len(),
        });
    }
    tokens
}

/// Number of word tokens in `text`.
pub fn token_count(text: &str) -> usize {
    let mut count = 0;
    let mut in_token = false;
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            if !in_token {
                count += 1;
                in_token = true;
            }
        } else {
            in_token = false;
        }
    }
    count
}

/// Lowercased token strings of `text`, in order (duplicates preserved).
pub fn lower_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .map(|t| t.text.to_lowercase())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_whitespace_and_punctuation() {
        let toks = tokenize("Hello, world! Isn't 42 fine?");
        let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, vec!["Hello", "world", "Isn", "t", "42", "fine"]);
    }

    #[test]
    fn spans_reslice_to_token_text() {
        let src = "wheat—yield (2021): 4.2 t/ha";
        for tok in tokenize(src) {
            assert_eq!(&src[tok.start..tok.end], tok.text);
        }
    }

    #[test]
    fn count_matches_tokenize_len() {
        for src in ["", "   ", "one", "a b  c,d.e", "καλή σοδειά 2024"] {
            assert_eq!(token_count(src), tokenize(src).len(), "src={src:?}");
        }
    }

    #[test]
    fn lower_tokens_lowercases() {
        assert_eq!(lower_tokens("Wheat WHEAT wheat"), vec!["wheat"; 3]);
    }

    #[test]
    fn empty_and_punctuation_only_yield_nothing() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("—!?.,;:()").is_empty());
        assert_eq!(token_count("—!?"), 0);
    }

    #[test]
    fn multibyte_boundaries_are_safe() {
        let src = "café—négoce, 葡萄";
        let toks = tokenize(src);
        assert_eq!(toks.len(), 3);
        assert_eq!(toks[0].text, "café");
        assert_eq!(toks[1].text, "négoce");
        assert_eq!(toks[2].text, "葡萄");
        for t in &toks {
            assert_eq!(&src[t.start..t.end], t.text);
        }
    }
}
