//! Extractive metrics (exact match, token F1, per-granularity R@1) and the
//! ablation harness comparing the full pipeline against mono-granularity
//! baselines.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::evidence::{serialize_candidate, EvidenceId, Granularity};
use crate::labels::{derive_gold_type, GoldType, LabelSet};
use crate::reader::{answer_from_dataset, Prediction, SpanReader};
use crate::scoring::{LinearScorer, ScoreError, ScoreSet};
use crate::select::{navigate, IncompleteScores, Navigation};
use crate::table::{AnswerType, Dataset};
use crate::text::{normalize_text, normalized_tokens};

/// 1 iff the prediction equals some gold answer after normalization.
pub fn exact_match(pred: &str, golds: &[String]) -> bool {
    let p = normalize_text(pred);
    golds.iter().any(|g| normalize_text(g) == p)
}

/// Maximum over golds of the F1 between normalized-token multisets. Zero
/// when exactly one side is empty, one when both are.
pub fn token_f1(pred: &str, golds: &[String]) -> f64 {
    golds.iter().map(|g| pair_f1(pred, g)).fold(0.0, f64::max)
}

fn pair_f1(pred: &str, gold: &str) -> f64 {
    let p = normalized_tokens(pred);
    let g = normalized_tokens(gold);
    if p.is_empty() && g.is_empty() {
        return 1.0;
    }
    if p.is_empty() || g.is_empty() {
        return 0.0;
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &g {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    let mut shared = 0usize;
    for t in &p {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                shared += 1;
            }
        }
    }
    if shared == 0 {
        return 0.0;
    }
    let precision = shared as f64 / p.len() as f64;
    let recall = shared as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// 1 iff the top-scored candidate of the granularity is labeled positive.
/// Ties resolve to the lowest coordinate order; a granularity with no
/// candidates counts as a miss.
pub fn recall_at_1(scores: &ScoreSet, labels: &LabelSet, granularity: Granularity) -> bool {
    match scores.top_of(granularity) {
        Some((id, _)) => labels.get(&id),
        None => false,
    }
}

/// 1 iff the navigated fine-grained evidence — the cell for an in-table
/// navigation, the link otherwise — is labeled positive.
pub fn multi_r_at_1(nav: &Navigation, labels: &LabelSet) -> bool {
    navigated_hit(nav.answer_type, nav.cell, nav.link_index, labels)
}

fn navigated_hit(
    answer_type: AnswerType,
    cell: (usize, usize),
    link_index: Option<usize>,
    labels: &LabelSet,
) -> bool {
    match answer_type {
        AnswerType::InTable => labels.get(&EvidenceId::Cell { row: cell.0, col: cell.1 }),
        AnswerType::InPassage => match link_index {
            Some(link) => labels.get(&EvidenceId::Link { row: cell.0, col: cell.1, link }),
            None => false,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SplitMetrics {
    pub em: f64,
    pub f1: f64,
    pub n: usize,
}

/// Top-1 recall rates over answerable questions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RecallAtOne {
    pub col: f64,
    pub row: f64,
    pub cell: f64,
    pub link: f64,
    pub multi: f64,
    pub answerable: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub in_table: SplitMetrics,
    pub in_passage: SplitMetrics,
    pub total: SplitMetrics,
    pub unanswerable: usize,
    pub r_at_1: RecallAtOne,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    MissingPrediction { question_id: String },
    MissingLabels { question_id: String },
    MissingScores { question_id: String },
    DuplicatePrediction { question_id: String },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (what, id) = match self {
            EvalError::MissingPrediction { question_id } => ("prediction", question_id),
            EvalError::MissingLabels { question_id } => ("labels", question_id),
            EvalError::MissingScores { question_id } => ("scores", question_id),
            EvalError::DuplicatePrediction { question_id } => {
                return write!(f, "duplicate prediction for question {question_id}")
            }
        };
        write!(f, "missing {what} for question {id}")
    }
}

impl core::error::Error for EvalError {}

/// Aggregates EM/F1 by gold answer type and the five R@1 rates.
///
/// The split a question lands in is its declared gold type, falling back
/// to the distant-label derivation. Questions whose labels contain no
/// positive at all are excluded from the R@1 denominators; those with no
/// declared type either are counted under `unanswerable` instead of a
/// split. Multi-granularity R@1 reads the prediction's navigation fields.
pub fn evaluate(
    predictions: &[Prediction],
    dataset: &Dataset,
    labels: &BTreeMap<String, LabelSet>,
    scores: &BTreeMap<String, ScoreSet>,
) -> Result<MetricsReport, EvalError> {
    let mut by_id: BTreeMap<&str, &Prediction> = BTreeMap::new();
    for p in predictions {
        if by_id.insert(p.question_id.as_str(), p).is_some() {
            return Err(EvalError::DuplicatePrediction { question_id: p.question_id.clone() });
        }
    }

    let mut sums: BTreeMap<AnswerType, (f64, f64, usize)> = BTreeMap::new();
    let mut unanswerable = 0usize;
    let mut recall_hits = [0usize; 5];
    let mut answerable = 0usize;

    for question in dataset.questions() {
        let qid = question.id.as_str();
        let pred = *by_id
            .get(qid)
            .ok_or_else(|| EvalError::MissingPrediction { question_id: qid.to_string() })?;
        let label_set = labels
            .get(qid)
            .ok_or_else(|| EvalError::MissingLabels { question_id: qid.to_string() })?;
        let score_set = scores
            .get(qid)
            .ok_or_else(|| EvalError::MissingScores { question_id: qid.to_string() })?;

        let derived = derive_gold_type(label_set);
        let effective = question.gold_type.or(derived.as_answer_type());
        match effective {
            Some(split) => {
                let em = exact_match(&pred.answer, &question.gold_answers);
                let f1 = token_f1(&pred.answer, &question.gold_answers);
                let entry = sums.entry(split).or_insert((0.0, 0.0, 0));
                entry.0 += if em { 1.0 } else { 0.0 };
                entry.1 += f1;
                entry.2 += 1;
            }
            None => unanswerable += 1,
        }

        if derived != GoldType::Unanswerable {
            answerable += 1;
            let mono = [Granularity::Col, Granularity::Row, Granularity::Cell, Granularity::Link];
            for (k, g) in mono.into_iter().enumerate() {
                if recall_at_1(score_set, label_set, g) {
                    recall_hits[k] += 1;
                }
            }
            if navigated_hit(pred.answer_type, pred.cell, pred.link_index, label_set) {
                recall_hits[4] += 1;
            }
        }
    }

    let split = |t: AnswerType| -> SplitMetrics {
        match sums.get(&t) {
            Some((em, f1, n)) => SplitMetrics { em: em / *n as f64, f1: f1 / *n as f64, n: *n },
            None => SplitMetrics::default(),
        }
    };
    let in_table = split(AnswerType::InTable);
    let in_passage = split(AnswerType::InPassage);

    // The total is the question-count-weighted mean of the split means,
    // evaluated in exactly this order so the identity is bit-checkable.
    let n_total = in_table.n + in_passage.n;
    let weighted = |a: &SplitMetrics, b: &SplitMetrics, f: fn(&SplitMetrics) -> f64| {
        if n_total == 0 {
            0.0
        } else {
            (a.n as f64 * f(a) + b.n as f64 * f(b)) / n_total as f64
        }
    };
    let total = SplitMetrics {
        em: weighted(&in_table, &in_passage, |s| s.em),
        f1: weighted(&in_table, &in_passage, |s| s.f1),
        n: n_total,
    };

    let rate = |hits: usize| if answerable == 0 { 0.0 } else { hits as f64 / answerable as f64 };
    Ok(MetricsReport {
        in_table,
        in_passage,
        total,
        unanswerable,
        r_at_1: RecallAtOne {
            col: rate(recall_hits[0]),
            row: rate(recall_hits[1]),
            cell: rate(recall_hits[2]),
            link: rate(recall_hits[3]),
            multi: rate(recall_hits[4]),
            answerable,
        },
    })
}

/// Which evidence the answer derivation uses: one granularity's top-1
/// candidate, or the full fused navigation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AblationMode {
    Col,
    Row,
    Cell,
    Link,
    Multi,
}

impl AblationMode {
    pub const ALL: [AblationMode; 5] = [
        AblationMode::Col,
        AblationMode::Row,
        AblationMode::Cell,
        AblationMode::Link,
        AblationMode::Multi,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AblationMode::Col => "col",
            AblationMode::Row => "row",
            AblationMode::Cell => "cell",
            AblationMode::Link => "link",
            AblationMode::Multi => "multi",
        }
    }
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AblationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "col" => Ok(AblationMode::Col),
            "row" => Ok(AblationMode::Row),
            "cell" => Ok(AblationMode::Cell),
            "link" => Ok(AblationMode::Link),
            "multi" => Ok(AblationMode::Multi),
            other => Err(alloc::format!("unknown ablation mode: {other}")),
        }
    }
}

#[derive(Debug)]
pub enum PipelineError {
    Score(ScoreError),
    Incomplete(IncompleteScores),
    Eval(EvalError),
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::Score(e) => write!(f, "{e}"),
            PipelineError::Incomplete(e) => write!(f, "{e}"),
            PipelineError::Eval(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for PipelineError {}

impl From<ScoreError> for PipelineError {
    fn from(e: ScoreError) -> Self {
        PipelineError::Score(e)
    }
}

impl From<IncompleteScores> for PipelineError {
    fn from(e: IncompleteScores) -> Self {
        PipelineError::Incomplete(e)
    }
}

impl From<EvalError> for PipelineError {
    fn from(e: EvalError) -> Self {
        PipelineError::Eval(e)
    }
}

/// Characters of flattened mono-granularity evidence handed to the reader.
pub const FLATTEN_CHAR_LIMIT: usize = 4096;

/// Runs one report per mode. Mono modes bypass the evidence selector for
/// the answer: column, row, and link modes flatten the top-1 evidence by
/// the candidate serialization rules (truncated to
/// [`FLATTEN_CHAR_LIMIT`] characters) and read a span from it, while cell
/// mode returns the top-1 cell value verbatim. Every mode's predictions
/// carry the fused navigation, so the R@1 block reflects the retriever
/// alone and is identical across modes.
pub fn ablate(
    dataset: &Dataset,
    labels: &BTreeMap<String, LabelSet>,
    scorer: &LinearScorer,
    reader: &dyn SpanReader,
    modes: &[AblationMode],
) -> Result<BTreeMap<AblationMode, MetricsReport>, PipelineError> {
    let mut all_scores: BTreeMap<String, ScoreSet> = BTreeMap::new();
    let mut per_mode: BTreeMap<AblationMode, Vec<Prediction>> =
        modes.iter().map(|m| (*m, Vec::new())).collect();

    for question in dataset.questions() {
        let table = dataset.table_for(question);
        let passage_text =
            |pid: &str| dataset.passage(pid).map(|p| p.text.as_str()).unwrap_or("");
        let scores = scorer.score_question(dataset, question)?;
        let nav = navigate(&scores, table)?;

        for mode in modes {
            let answer = match mode {
                AblationMode::Multi => {
                    answer_from_dataset(dataset, question, &scores, reader)?.answer
                }
                AblationMode::Cell => match scores.top_of(Granularity::Cell) {
                    Some((EvidenceId::Cell { row, col }, _)) => {
                        table.cell(row, col).value.clone()
                    }
                    _ => String::new(),
                },
                AblationMode::Col => match scores.top_of(Granularity::Col) {
                    Some((id, _)) => {
                        let flat = flatten(question, table, &passage_text, id);
                        reader.extract(question, &truncate_chars(&flat, FLATTEN_CHAR_LIMIT))
                    }
                    None => String::new(),
                },
                AblationMode::Row => match scores.top_of(Granularity::Row) {
                    Some((id, _)) => {
                        let flat = flatten(question, table, &passage_text, id);
                        reader.extract(question, &truncate_chars(&flat, FLATTEN_CHAR_LIMIT))
                    }
                    None => String::new(),
                },
                AblationMode::Link => match scores.top_of(Granularity::Link) {
                    Some((id, _)) => {
                        let flat = flatten(question, table, &passage_text, id);
                        reader.extract(question, &truncate_chars(&flat, FLATTEN_CHAR_LIMIT))
                    }
                    None => String::new(),
                },
            };
            per_mode
                .get_mut(mode)
                .unwrap()
                .push(Prediction::from_navigation(&question.id, answer, &nav, reader.name()));
        }
        all_scores.insert(question.id.clone(), scores);
    }

    let mut out = BTreeMap::new();
    for (mode, predictions) in per_mode {
        let report = evaluate(&predictions, dataset, labels, &all_scores)?;
        out.insert(mode, report);
    }
    Ok(out)
}

/// Flattened text of one candidate: the contents of its serialization,
/// row candidates joined across their cells.
fn flatten<'a, F>(
    question: &crate::table::Question,
    table: &crate::table::HybridTable,
    passage_text: &F,
    id: EvidenceId,
) -> String
where
    F: Fn(&str) -> &'a str,
{
    let parts: Vec<String> = serialize_candidate(question, table, passage_text, id)
        .into_iter()
        .map(|c| c.content)
        .collect();
    parts.join(" [SEP] ")
}

fn truncate_chars(s: &str, limit: usize) -> String {
    s.chars().take(limit).collect()
}
