//! Span extraction from the navigated passage: a pluggable reader contract
//! plus a deterministic lexical baseline, and the end-to-end answer
//! assembly over a navigation.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::scoring::ScoreSet;
use crate::select::{navigate, IncompleteScores, Navigation};
use crate::table::{AnswerType, Dataset, HybridTable, Question};
use crate::text::{normalize_text, normalized_tokens};

/// A span-extraction reader. Implementations must be deterministic; an
/// empty returned string signals abstention.
pub trait SpanReader {
    fn name(&self) -> &str;
    fn extract(&self, question: &Question, passage_text: &str) -> String;
}

/// Proximity-scored baseline: over all token spans up to
/// `max_span_tokens` long, pick the span maximizing the number of
/// question tokens inside a window extending `max_span_tokens` beyond each
/// end of the span, minus 0.01 per span token. Ties go to the earliest
/// start, then the shortest span.
#[derive(Debug, Clone)]
pub struct LexicalReader {
    pub max_span_tokens: usize,
}

impl Default for LexicalReader {
    fn default() -> Self {
        LexicalReader { max_span_tokens: 8 }
    }
}

impl SpanReader for LexicalReader {
    fn name(&self) -> &str {
        "lexical-window"
    }

    fn extract(&self, question: &Question, passage_text: &str) -> String {
        extract_span(question, passage_text, self.max_span_tokens)
    }
}

/// The baseline extraction; see [`LexicalReader`]. Always returns a
/// contiguous substring of the passage (empty only for an all-whitespace
/// passage).
pub fn extract_span(question: &Question, passage_text: &str, max_span_tokens: usize) -> String {
    let tokens = tokenize_with_spans(passage_text);
    if tokens.is_empty() || max_span_tokens == 0 {
        return String::new();
    }
    let question_tokens: alloc::collections::BTreeSet<String> =
        normalized_tokens(&question.text).into_iter().collect();
    let is_hit: Vec<bool> =
        tokens.iter().map(|t| question_tokens.contains(&normalize_text(t.text))).collect();

    let n = tokens.len();
    let mut best: Option<(f64, usize, usize)> = None;
    for start in 0..n {
        for len in 1..=max_span_tokens.min(n - start) {
            let end = start + len;
            let window_lo = start.saturating_sub(max_span_tokens);
            let window_hi = (end + max_span_tokens).min(n);
            let count = is_hit[window_lo..window_hi].iter().filter(|h| **h).count();
            let score = count as f64 - 0.01 * len as f64;
            match best {
                Some((bs, _, _)) if score <= bs => {}
                _ => best = Some((score, start, end)),
            }
        }
    }
    let (_, start, end) = best.expect("non-empty token list yields a span");
    passage_text[tokens[start].byte_start..tokens[end - 1].byte_end].to_string()
}

struct Token<'a> {
    text: &'a str,
    byte_start: usize,
    byte_end: usize,
}

fn tokenize_with_spans(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for piece in text.split_whitespace() {
        // split_whitespace walks left to right, so this find is the piece.
        let at = text[offset..].find(piece).expect("piece comes from text") + offset;
        out.push(Token { text: piece, byte_start: at, byte_end: at + piece.len() });
        offset = at + piece.len();
    }
    out
}

/// One answered question, shaped like the prediction file's records.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub question_id: String,
    pub answer: String,
    pub answer_type: AnswerType,
    pub cell: (usize, usize),
    pub link_index: Option<usize>,
    pub reader_name: String,
}

impl Prediction {
    pub fn from_navigation(
        question_id: &str,
        answer: String,
        nav: &Navigation,
        reader_name: &str,
    ) -> Prediction {
        Prediction {
            question_id: question_id.to_string(),
            answer,
            answer_type: nav.answer_type,
            cell: nav.cell,
            link_index: nav.link_index,
            reader_name: reader_name.to_string(),
        }
    }
}

/// Navigates the scores and assembles the answer: an in-table navigation
/// returns the cell value verbatim, an in-passage navigation runs the
/// reader over the navigated link's passage.
pub fn answer_question<'a, F>(
    question: &Question,
    table: &HybridTable,
    passage_text: F,
    scores: &ScoreSet,
    reader: &dyn SpanReader,
) -> Result<Prediction, IncompleteScores>
where
    F: Fn(&str) -> &'a str,
{
    let nav = navigate(scores, table)?;
    let answer = match nav.answer_type {
        AnswerType::InTable => table.cell(nav.cell.0, nav.cell.1).value.clone(),
        AnswerType::InPassage => {
            let link = nav.link_index.expect("in-passage navigation carries a link");
            let pid = &table.cell(nav.cell.0, nav.cell.1).link_ids[link];
            reader.extract(question, passage_text(pid))
        }
    };
    Ok(Prediction::from_navigation(&question.id, answer, &nav, reader.name()))
}

/// As [`answer_question`], resolving passages through a dataset.
pub fn answer_from_dataset(
    dataset: &Dataset,
    question: &Question,
    scores: &ScoreSet,
    reader: &dyn SpanReader,
) -> Result<Prediction, IncompleteScores> {
    let table = dataset.table_for(question);
    answer_question(
        question,
        table,
        |pid| dataset.passage(pid).map(|p| p.text.as_str()).unwrap_or(""),
        scores,
        reader,
    )
}
