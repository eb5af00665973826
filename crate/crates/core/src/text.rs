//! Text normalization and answer-containment used for distant supervision
//! and the extractive metrics.

use alloc::string::String;
use alloc::vec::Vec;

const PUNCTUATION: &[char] =
    &['.', ',', '!', '?', ';', ':', '\'', '"', '(', ')', '[', ']', '{', '}'];

/// Lowercases, strips the punctuation set `.,!?;:'"()[]{}`, drops the
/// articles "a"/"an"/"the" as whole tokens, and collapses whitespace runs
/// to single spaces. Idempotent.
pub fn normalize_text(s: &str) -> String {
    let lower = s.to_lowercase();
    let stripped: String = lower.chars().filter(|c| !PUNCTUATION.contains(c)).collect();
    let mut out = String::with_capacity(stripped.len());
    for token in stripped.split_whitespace() {
        if matches!(token, "a" | "an" | "the") {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(token);
    }
    out
}

/// The normalized token sequence of `s`.
pub fn normalized_tokens(s: &str) -> Vec<String> {
    normalize_text(s).split_whitespace().map(String::from).collect()
}

/// True iff some answer's normalized tokens appear as a contiguous token
/// subsequence of the normalized haystack. Answers that normalize to
/// nothing never match.
pub fn contains_answer(haystack: &str, answers: &[String]) -> bool {
    let hay = normalized_tokens(haystack);
    answers.iter().any(|a| {
        let needle = normalized_tokens(a);
        contains_token_run(&hay, &needle)
    })
}

fn contains_token_run(hay: &[String], needle: &[String]) -> bool {
    if needle.is_empty() || needle.len() > hay.len() {
        return false;
    }
    hay.windows(needle.len()).any(|w| w == needle)
}
