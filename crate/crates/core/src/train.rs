//! Joint training of the unified retriever: seeded mini-batch gradient
//! descent over four-granularity groups, one positive with a noise-masked
//! duplicate plus sampled same-question negatives per group.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::evidence::{serialize_candidate, Granularity};
use crate::features::{FeatureVector, Featurizer};
use crate::labels::{cell_region_contains, LabelSet};
use crate::loss::{total_loss_and_gradient, ClGroup, LossError, TrainBatch, TrainGroup};
use crate::scoring::LinearScorer;
use crate::table::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Contrastive temperature.
    pub tau: f64,
    pub learning_rate: f64,
    pub epochs: u32,
    /// Instances per granularity group: one positive plus the negatives.
    pub group_size: usize,
    pub seed: u64,
    /// Probability of zeroing each feature of the duplicated positive.
    pub feature_noise_rate: f64,
    pub negatives_per_positive: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            tau: 0.05,
            learning_rate: 0.1,
            epochs: 30,
            group_size: 6,
            seed: 0,
            feature_noise_rate: 0.1,
            negatives_per_positive: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.tau > 0.0) {
            return Err(TrainError::BadConfig { what: "tau must be positive" });
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::BadConfig { what: "learning rate must be finite and >= 0" });
        }
        if !(0.0..1.0).contains(&self.feature_noise_rate) {
            return Err(TrainError::BadConfig { what: "feature noise rate must be in [0,1)" });
        }
        if self.group_size < 2 {
            return Err(TrainError::BadConfig { what: "group size must be at least 2" });
        }
        if self.negatives_per_positive + 1 != self.group_size {
            return Err(TrainError::BadConfig {
                what: "group size must equal negatives per positive plus one",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    BadConfig { what: &'static str },
    /// A granularity has no positive instance anywhere in the split.
    NoPositives(Granularity),
    /// A granularity has no negative instance anywhere in the split.
    NoNegatives(Granularity),
    MissingLabels { question_id: String },
    Loss(LossError),
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::BadConfig { what } => write!(f, "bad train config: {what}"),
            TrainError::NoPositives(g) => write!(f, "no positive {g} instance in training split"),
            TrainError::NoNegatives(g) => write!(f, "no negative {g} instance in training split"),
            TrainError::MissingLabels { question_id } => {
                write!(f, "no labels for question {question_id}")
            }
            TrainError::Loss(e) => write!(f, "loss evaluation failed: {e}"),
        }
    }
}

impl core::error::Error for TrainError {}

impl From<LossError> for TrainError {
    fn from(e: LossError) -> Self {
        TrainError::Loss(e)
    }
}

/// Result of a training run: the scorer plus the summed batch loss per
/// epoch, in order.
#[derive(Debug, Clone)]
pub struct Trained {
    pub scorer: LinearScorer,
    pub epoch_losses: Vec<f64>,
}

struct Example {
    features: FeatureVector,
    positive: bool,
}

struct QuestionExamples {
    // Instances per granularity; rows contribute one instance per cell.
    by_granularity: BTreeMap<Granularity, Vec<Example>>,
}

fn gran_index(g: Granularity) -> usize {
    match g {
        Granularity::Col => 0,
        Granularity::Row => 1,
        Granularity::Cell => 2,
        Granularity::Link => 3,
    }
}

fn build_examples(
    dataset: &Dataset,
    labels: &BTreeMap<String, LabelSet>,
    featurizer: &Featurizer,
) -> Result<Vec<QuestionExamples>, TrainError> {
    let mut out = Vec::with_capacity(dataset.questions().len());
    for question in dataset.questions() {
        let label_set = labels
            .get(&question.id)
            .ok_or_else(|| TrainError::MissingLabels { question_id: question.id.clone() })?;
        let table = dataset.table_for(question);
        let passage_text =
            |pid: &str| dataset.passage(pid).map(|p| p.text.as_str()).unwrap_or("");

        let mut by_granularity: BTreeMap<Granularity, Vec<Example>> = BTreeMap::new();
        for g in Granularity::ALL {
            by_granularity.insert(g, Vec::new());
        }
        for id in crate::evidence::enumerate_candidates(table) {
            let candidates = serialize_candidate(question, table, &passage_text, id);
            match id {
                // A row expands to one instance per cell, each labeled by
                // the per-cell region containment the row label aggregates.
                crate::evidence::EvidenceId::Row { row } => {
                    for (col, candidate) in candidates.iter().enumerate() {
                        let positive = cell_region_contains(
                            table.cell(row, col),
                            &passage_text,
                            &question.gold_answers,
                        );
                        let features = featurizer.featurize(candidate, question);
                        by_granularity
                            .get_mut(&Granularity::Row)
                            .unwrap()
                            .push(Example { features, positive });
                    }
                }
                _ => {
                    let candidate = &candidates[0];
                    let positive = label_set.get(&id);
                    let features = featurizer.featurize(candidate, question);
                    by_granularity
                        .get_mut(&id.granularity())
                        .unwrap()
                        .push(Example { features, positive });
                }
            }
        }
        out.push(QuestionExamples { by_granularity });
    }
    Ok(out)
}

/// Zeroes each feature independently with the configured probability,
/// producing the contrastive positive for an anchor.
fn noise_mask(rng: &mut ChaCha8Rng, features: &FeatureVector, rate: f64) -> FeatureVector {
    FeatureVector {
        values: features
            .values
            .iter()
            .map(|v| if rng.gen::<f64>() < rate { 0.0 } else { *v })
            .collect(),
    }
}

/// Trains the retriever with plain gradient descent from zero weights.
/// Deterministic for a fixed (dataset, labels, config).
pub fn train(
    dataset: &Dataset,
    labels: &BTreeMap<String, LabelSet>,
    cfg: &TrainConfig,
) -> Result<Trained, TrainError> {
    cfg.validate()?;
    let featurizer = Featurizer::fit(dataset);
    let examples = build_examples(dataset, labels, &featurizer)?;

    // (question index, instance index) per granularity.
    let mut positives: [Vec<(usize, usize)>; 4] = Default::default();
    let mut negatives: [Vec<(usize, usize)>; 4] = Default::default();
    for (qi, qe) in examples.iter().enumerate() {
        for (g, items) in &qe.by_granularity {
            for (ii, ex) in items.iter().enumerate() {
                let bucket = gran_index(*g);
                if ex.positive {
                    positives[bucket].push((qi, ii));
                } else {
                    negatives[bucket].push((qi, ii));
                }
            }
        }
    }
    for g in Granularity::ALL {
        if positives[gran_index(g)].is_empty() {
            return Err(TrainError::NoPositives(g));
        }
    }
    for g in Granularity::ALL {
        if negatives[gran_index(g)].is_empty() {
            return Err(TrainError::NoNegatives(g));
        }
    }

    let features_of = |qi: usize, g: Granularity, ii: usize| -> &FeatureVector {
        &examples[qi].by_granularity[&g][ii].features
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut weights = alloc::vec![0.0; featurizer.dim()];
    let mut epoch_losses = Vec::with_capacity(cfg.epochs as usize);

    for _epoch in 0..cfg.epochs {
        let mut order: [Vec<(usize, usize)>; 4] = positives.clone();
        for pool in order.iter_mut() {
            pool.shuffle(&mut rng);
        }
        let n_batches = order.iter().map(Vec::len).max().unwrap_or(0);
        let mut epoch_loss = 0.0;

        for b in 0..n_batches {
            let mut groups = Vec::with_capacity(4);
            for g in Granularity::ALL {
                let bucket = gran_index(g);
                let (qi, ii) = order[bucket][b % order[bucket].len()];
                let anchor = features_of(qi, g, ii).clone();
                let positive = noise_mask(&mut rng, &anchor, cfg.feature_noise_rate);

                // Same-question negatives of the same granularity, falling
                // back to the global pool when the question has none.
                let local: Vec<usize> = examples[qi].by_granularity[&g]
                    .iter()
                    .enumerate()
                    .filter(|(_, ex)| !ex.positive)
                    .map(|(i, _)| i)
                    .collect();
                let negs: Vec<FeatureVector> = if local.is_empty() {
                    sample_refs(&mut rng, &negatives[bucket], cfg.negatives_per_positive)
                        .into_iter()
                        .map(|(nq, ni)| features_of(nq, g, ni).clone())
                        .collect()
                } else {
                    sample_indices(&mut rng, &local, cfg.negatives_per_positive)
                        .into_iter()
                        .map(|ni| features_of(qi, g, ni).clone())
                        .collect()
                };

                groups.push(TrainGroup {
                    granularity: g,
                    cl: ClGroup { anchor, positive, negatives: negs },
                });
            }
            let batch = TrainBatch { groups };
            batch.validate(cfg.group_size)?;
            let (loss, grad) = total_loss_and_gradient(&batch, &weights, cfg.tau)?;
            epoch_loss += loss;
            for (w, g) in weights.iter_mut().zip(&grad) {
                *w -= cfg.learning_rate * g;
            }
        }
        epoch_losses.push(epoch_loss);
    }

    Ok(Trained { scorer: LinearScorer::new(weights, featurizer), epoch_losses })
}

// Uniform sample of k items: without replacement when the pool is large
// enough, with replacement otherwise.
fn sample_indices(rng: &mut ChaCha8Rng, pool: &[usize], k: usize) -> Vec<usize> {
    if pool.len() >= k {
        let mut scratch: Vec<usize> = pool.to_vec();
        scratch.partial_shuffle(rng, k);
        scratch.truncate(k);
        scratch
    } else {
        (0..k).map(|_| pool[rng.gen_range(0..pool.len())]).collect()
    }
}

fn sample_refs(
    rng: &mut ChaCha8Rng,
    pool: &[(usize, usize)],
    k: usize,
) -> Vec<(usize, usize)> {
    if pool.len() >= k {
        let mut scratch: Vec<(usize, usize)> = pool.to_vec();
        scratch.partial_shuffle(rng, k);
        scratch.truncate(k);
        scratch
    } else {
        (0..k).map(|_| pool[rng.gen_range(0..pool.len())]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::label_question;
    use crate::table::{Cell, HybridTable, Passage, Question};
    use alloc::string::ToString;
    use alloc::vec;

    // A small corpus where lexical overlap separates positives cleanly:
    // each question names its row key and column header, and the answer
    // sits in that cell or its passage.
    fn corpus() -> Dataset {
        let mut tables = Vec::new();
        let mut passages = Vec::new();
        let mut questions = Vec::new();
        for t in 0..6 {
            let tid = alloc::format!("t{t}");
            let headers = vec!["name".to_string(), "prize".to_string()];
            let mut cells = Vec::new();
            for i in 0..3 {
                let pid = alloc::format!("p{t}x{i}");
                passages.push(Passage {
                    id: pid.clone(),
                    text: alloc::format!("filler fact{t}r{i} notes person{t}r{i} won medal{t}r{i} overall"),
                });
                cells.push(vec![
                    Cell { value: alloc::format!("person{t}r{i}"), link_ids: vec![] },
                    Cell { value: alloc::format!("trophy{t}r{i}"), link_ids: vec![pid] },
                ]);
            }
            tables.push(HybridTable { id: tid.clone(), headers, cells });
            let target = t % 3;
            if t % 2 == 0 {
                questions.push(Question {
                    id: alloc::format!("q{t}"),
                    table_id: tid,
                    text: alloc::format!("which prize did person{t}r{target} take"),
                    gold_answers: vec![alloc::format!("trophy{t}r{target}")],
                    gold_type: None,
                });
            } else {
                questions.push(Question {
                    id: alloc::format!("q{t}"),
                    table_id: tid,
                    text: alloc::format!("which medal did person{t}r{target} take"),
                    gold_answers: vec![alloc::format!("medal{t}r{target}")],
                    gold_type: None,
                });
            }
        }
        Dataset::new(tables, passages, questions).unwrap()
    }

    fn corpus_labels(ds: &Dataset) -> BTreeMap<String, LabelSet> {
        ds.questions()
            .iter()
            .map(|q| (q.id.clone(), label_question(ds, q)))
            .collect()
    }

    #[test]
    fn same_seed_trains_identical_weights() {
        let ds = corpus();
        let labels = corpus_labels(&ds);
        let cfg = TrainConfig { epochs: 4, seed: 11, ..TrainConfig::default() };
        let a = train(&ds, &labels, &cfg).unwrap();
        let b = train(&ds, &labels, &cfg).unwrap();
        assert_eq!(a.scorer.weights, b.scorer.weights);
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }

    #[test]
    fn zero_learning_rate_leaves_weights_unchanged() {
        let ds = corpus();
        let labels = corpus_labels(&ds);
        let cfg =
            TrainConfig { epochs: 3, learning_rate: 0.0, seed: 5, ..TrainConfig::default() };
        let out = train(&ds, &labels, &cfg).unwrap();
        assert!(out.scorer.weights.iter().all(|w| *w == 0.0));
    }

    #[test]
    fn zero_epochs_returns_zero_weights() {
        let ds = corpus();
        let labels = corpus_labels(&ds);
        let cfg = TrainConfig { epochs: 0, seed: 5, ..TrainConfig::default() };
        let out = train(&ds, &labels, &cfg).unwrap();
        assert!(out.scorer.weights.iter().all(|w| *w == 0.0));
        assert!(out.epoch_losses.is_empty());
    }

    #[test]
    fn loss_decreases_on_separable_corpus() {
        let ds = corpus();
        let labels = corpus_labels(&ds);
        let cfg = TrainConfig { epochs: 10, seed: 42, ..TrainConfig::default() };
        let out = train(&ds, &labels, &cfg).unwrap();
        for w in out.epoch_losses.windows(2) {
            assert!(w[1] < w[0], "epoch loss did not decrease: {:?}", out.epoch_losses);
        }
    }

    #[test]
    fn missing_granularity_positive_is_reported() {
        // No question's answer appears in any passage: link has no positives.
        let table = HybridTable {
            id: "t".to_string(),
            headers: vec!["h".to_string()],
            cells: vec![vec![Cell { value: "only value".to_string(), link_ids: vec!["p".to_string()] }]],
        };
        let ds = Dataset::new(
            vec![table],
            vec![Passage { id: "p".to_string(), text: "nothing relevant".to_string() }],
            vec![Question {
                id: "q".to_string(),
                table_id: "t".to_string(),
                text: "what".to_string(),
                gold_answers: vec!["only value".to_string()],
                gold_type: None,
            }],
        )
        .unwrap();
        let labels = corpus_labels(&ds);
        let err = train(&ds, &labels, &TrainConfig::default()).unwrap_err();
        assert_eq!(err, TrainError::NoPositives(Granularity::Link));
    }

    #[test]
    fn config_validation() {
        let mut cfg = TrainConfig::default();
        cfg.tau = 0.0;
        assert!(cfg.validate().is_err());
        cfg = TrainConfig { negatives_per_positive: 3, ..TrainConfig::default() };
        assert!(cfg.validate().is_err());
        cfg = TrainConfig { feature_noise_rate: 1.0, ..TrainConfig::default() };
        assert!(cfg.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }
}
