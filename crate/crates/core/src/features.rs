//! Lexical featurizer: a fixed, deterministic stand-in for an encoder,
//! producing the vector the linear projection scores. Sealed behind the
//! scorer so an external encoder can replace it via imported score files.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::evidence::{EvidenceCandidate, Granularity};
use crate::table::{Dataset, Question};
use crate::text::{normalize_text, normalized_tokens};

/// Fixed-length real vector standing in for an encoded representation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.values.iter().zip(weights).map(|(a, b)| a * b).sum()
    }
}

/// Feature layout, in order:
/// distinct question/content token overlap count, IDF-weighted overlap,
/// character 3-gram Jaccard, log content token count, granularity one-hot
/// (col, row, cell, link), header-token match flag.
pub const FEATURE_DIM: usize = 9;

/// Document-frequency vocabulary over a corpus plus the feature
/// definitions bound to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Featurizer {
    pub doc_count: u64,
    pub doc_freq: BTreeMap<String, u64>,
}

impl Featurizer {
    pub fn dim(&self) -> usize {
        FEATURE_DIM
    }

    /// Fits document frequencies over a dataset's atomic content units:
    /// each header, each cell value, each passage.
    pub fn fit(dataset: &Dataset) -> Featurizer {
        let mut doc_count = 0u64;
        let mut doc_freq: BTreeMap<String, u64> = BTreeMap::new();
        let mut add_doc = |text: &str| {
            doc_count += 1;
            let tokens: BTreeSet<String> = normalized_tokens(text).into_iter().collect();
            for t in tokens {
                *doc_freq.entry(t).or_insert(0) += 1;
            }
        };
        for table in dataset.tables().values() {
            for h in &table.headers {
                add_doc(h);
            }
            for row in &table.cells {
                for cell in row {
                    add_doc(&cell.value);
                }
            }
        }
        for p in dataset.passages().values() {
            add_doc(&p.text);
        }
        Featurizer { doc_count, doc_freq }
    }

    /// Smoothed inverse document frequency; unseen tokens get the maximum.
    pub fn idf(&self, token: &str) -> f64 {
        let df = self.doc_freq.get(token).copied().unwrap_or(0);
        libm::log((1.0 + self.doc_count as f64) / (1.0 + df as f64)) + 1.0
    }

    /// Deterministic lexical features over the question and the
    /// candidate's content segment.
    pub fn featurize(&self, candidate: &EvidenceCandidate, question: &Question) -> FeatureVector {
        let q_tokens: BTreeSet<String> = normalized_tokens(&question.text).into_iter().collect();
        let content_norm = normalize_text(&candidate.content);
        let c_token_list: Vec<&str> = content_norm.split_whitespace().collect();
        let c_tokens: BTreeSet<&str> = c_token_list.iter().copied().collect();

        let shared: Vec<&str> =
            q_tokens.iter().map(String::as_str).filter(|t| c_tokens.contains(*t)).collect();
        let overlap = shared.len() as f64;
        let idf_overlap: f64 = shared.iter().map(|t| self.idf(t)).sum();

        let q_norm = normalize_text(&question.text);
        let jaccard = trigram_jaccard(&q_norm, &content_norm);
        let log_len = libm::log(1.0 + c_token_list.len() as f64);

        let g = candidate.id.granularity();
        let one_hot = |want: Granularity| if g == want { 1.0 } else { 0.0 };

        let header_match = candidate
            .header
            .as_deref()
            .map(|h| normalized_tokens(h).iter().any(|t| q_tokens.contains(t)))
            .unwrap_or(false);

        FeatureVector {
            values: alloc::vec![
                overlap,
                idf_overlap,
                jaccard,
                log_len,
                one_hot(Granularity::Col),
                one_hot(Granularity::Row),
                one_hot(Granularity::Cell),
                one_hot(Granularity::Link),
                if header_match { 1.0 } else { 0.0 },
            ],
        }
    }
}

/// Jaccard similarity of character 3-gram sets; 0 when either side has no
/// trigrams.
fn trigram_jaccard(a: &str, b: &str) -> f64 {
    let ga = trigrams(a);
    let gb = trigrams(b);
    if ga.is_empty() || gb.is_empty() {
        return 0.0;
    }
    let inter = ga.intersection(&gb).count();
    let union = ga.union(&gb).count();
    inter as f64 / union as f64
}

fn trigrams(s: &str) -> BTreeSet<Vec<char>> {
    let chars: Vec<char> = s.chars().collect();
    if chars.len() < 3 {
        return BTreeSet::new();
    }
    chars.windows(3).map(|w| w.to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidence::EvidenceId;
    use alloc::string::ToString;
    use alloc::vec;

    fn featurizer() -> Featurizer {
        Featurizer { doc_count: 0, doc_freq: BTreeMap::new() }
    }

    fn candidate(tag: EvidenceId, content: &str, header: Option<&str>) -> EvidenceCandidate {
        EvidenceCandidate {
            id: tag,
            serialized: alloc::format!("[CLS] x [SEP] q [SEP] {content}"),
            content: content.to_string(),
            header: header.map(|h| h.to_string()),
        }
    }

    fn question(text: &str) -> Question {
        Question {
            id: "q".to_string(),
            table_id: "t".to_string(),
            text: text.to_string(),
            gold_answers: vec!["x".to_string()],
            gold_type: None,
        }
    }

    #[test]
    fn identical_question_and_content_maximizes_overlap() {
        let f = featurizer();
        let c = candidate(EvidenceId::Col { col: 0 }, "great blue heron", Some("great"));
        let v = f.featurize(&c, &question("great blue heron"));
        assert_eq!(v.values[0], 3.0);
        assert!(v.values[1] > 0.0);
        assert_eq!(v.values[2], 1.0);
        assert_eq!(&v.values[4..8], &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(v.values[8], 1.0);
    }

    #[test]
    fn disjoint_vocabularies_zero_overlap() {
        let f = featurizer();
        let c = candidate(EvidenceId::Link { row: 0, col: 0, link: 0 }, "xxx yyy", None);
        let v = f.featurize(&c, &question("aaa bbb"));
        assert_eq!(v.values[0], 0.0);
        assert_eq!(v.values[1], 0.0);
        assert_eq!(v.values[2], 0.0);
        assert_eq!(v.values[8], 0.0);
        assert_eq!(&v.values[4..8], &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn overlap_counts_distinct_normalized_tokens() {
        // Hand token-scan: shared tokens after normalization are
        // {directed, alien} -> overlap 2.
        let f = featurizer();
        let c = candidate(
            EvidenceId::Cell { row: 0, col: 0 },
            "Ridley Scott directed Alien",
            Some("Film"),
        );
        let v = f.featurize(&c, &question("who directed Alien"));
        assert_eq!(v.values[0], 2.0);
        assert_eq!(v.values[8], 0.0);
    }

    #[test]
    fn dimension_is_fixed() {
        let f = featurizer();
        let c = candidate(EvidenceId::Row { row: 0 }, "", Some("H"));
        assert_eq!(f.featurize(&c, &question("q")).dim(), FEATURE_DIM);
        assert_eq!(f.dim(), FEATURE_DIM);
    }
}
