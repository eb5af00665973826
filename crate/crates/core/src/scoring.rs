//! The unified multi-granularity scorer: a trainable linear projection over
//! lexical features, squashed by a sigmoid, with rows aggregated by the
//! maximum over their cells' row-tagged scores.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::evidence::{enumerate_candidates, serialize_candidate, EvidenceId};
use crate::features::{FeatureVector, Featurizer};
use crate::table::{Dataset, HybridTable, Question};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScoreError {
    DimensionMismatch { expected: usize, got: usize },
    EmptyRow,
}

impl fmt::Display for ScoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreError::DimensionMismatch { expected, got } => {
                write!(f, "feature vector of dimension {got}, scorer expects {expected}")
            }
            ScoreError::EmptyRow => write!(f, "row aggregation over no cell scores"),
        }
    }
}

impl core::error::Error for ScoreError {}

/// Numerically stable logistic function, nudged into the open interval so
/// downstream logs stay finite.
pub fn sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// The trained retriever: a bias-free weight vector over the featurizer's
/// output. Immutable once built; scoring different questions in parallel
/// shares it freely.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScorer {
    pub weights: Vec<f64>,
    pub featurizer: Featurizer,
}

impl LinearScorer {
    pub fn new(weights: Vec<f64>, featurizer: Featurizer) -> LinearScorer {
        LinearScorer { weights, featurizer }
    }

    /// A zero-weight scorer: every candidate scores 0.5.
    pub fn zeroed(featurizer: Featurizer) -> LinearScorer {
        let dim = featurizer.dim();
        LinearScorer { weights: alloc::vec![0.0; dim], featurizer }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `sigmoid(h . W)`.
    pub fn score_candidate(&self, h: &FeatureVector) -> Result<f64, ScoreError> {
        if h.dim() != self.weights.len() {
            return Err(ScoreError::DimensionMismatch {
                expected: self.weights.len(),
                got: h.dim(),
            });
        }
        Ok(sigmoid(h.dot(&self.weights)))
    }

    /// `h . W + h' . W`, the similarity the contrastive objective uses.
    pub fn similarity(&self, a: &FeatureVector, b: &FeatureVector) -> Result<f64, ScoreError> {
        if a.dim() != self.weights.len() || b.dim() != self.weights.len() {
            return Err(ScoreError::DimensionMismatch {
                expected: self.weights.len(),
                got: if a.dim() != self.weights.len() { a.dim() } else { b.dim() },
            });
        }
        Ok(a.dot(&self.weights) + b.dot(&self.weights))
    }

    /// Scores every candidate of the question's table. Rows are scored by
    /// the maximum over their cells' row-tagged serializations; everything
    /// else scores its own serialization directly.
    pub fn score_all<'a, F>(
        &self,
        question: &Question,
        table: &HybridTable,
        passage_text: F,
    ) -> Result<ScoreSet, ScoreError>
    where
        F: Fn(&str) -> &'a str,
    {
        let mut scores = BTreeMap::new();
        for id in enumerate_candidates(table) {
            let candidates = serialize_candidate(question, table, &passage_text, id);
            let score = match id {
                EvidenceId::Row { .. } => {
                    let cell_scores = candidates
                        .iter()
                        .map(|c| self.score_candidate(&self.featurizer.featurize(c, question)))
                        .collect::<Result<Vec<_>, _>>()?;
                    score_row(&cell_scores)?
                }
                _ => {
                    let c = &candidates[0];
                    self.score_candidate(&self.featurizer.featurize(c, question))?
                }
            };
            scores.insert(id, score);
        }
        Ok(ScoreSet { question_id: question.id.clone(), scores })
    }

    pub fn score_question(&self, dataset: &Dataset, question: &Question) -> Result<ScoreSet, ScoreError> {
        let table = dataset.table_for(question);
        self.score_all(question, table, |pid| {
            dataset.passage(pid).map(|p| p.text.as_str()).unwrap_or("")
        })
    }
}

/// Maximum over a row's cell scores.
pub fn score_row(cell_scores: &[f64]) -> Result<f64, ScoreError> {
    cell_scores.iter().copied().reduce(f64::max).ok_or(ScoreError::EmptyRow)
}

/// Retrieval scores for every candidate of one question, keyed in
/// canonical candidate order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub question_id: String,
    pub scores: BTreeMap<EvidenceId, f64>,
}

impl ScoreSet {
    pub fn get(&self, id: &EvidenceId) -> Option<f64> {
        self.scores.get(id).copied()
    }

    /// The candidate ids the table enumerates but this set lacks.
    pub fn missing_for(&self, table: &HybridTable) -> Vec<EvidenceId> {
        enumerate_candidates(table)
            .into_iter()
            .filter(|id| !self.scores.contains_key(id))
            .collect()
    }

    /// Top-scored candidate of a granularity; ties resolve to the lowest
    /// coordinate order. None when the table has no such candidates.
    pub fn top_of(&self, granularity: crate::evidence::Granularity) -> Option<(EvidenceId, f64)> {
        let mut best: Option<(EvidenceId, f64)> = None;
        for (id, s) in &self.scores {
            if id.granularity() != granularity {
                continue;
            }
            match best {
                Some((_, bs)) if *s <= bs => {}
                _ => best = Some((*id, *s)),
            }
        }
        best
    }
}
