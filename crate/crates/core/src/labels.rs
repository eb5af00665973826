//! Distant supervision: label every evidence candidate by answer
//! containment, and derive the gold answer type from the labels.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::evidence::{enumerate_candidates, EvidenceId};
use crate::table::{Cell, Dataset, HybridTable, Question};
use crate::text::contains_answer;

/// Binary containment labels for every enumerated candidate of one
/// question's table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    pub question_id: String,
    pub labels: BTreeMap<EvidenceId, bool>,
}

impl LabelSet {
    pub fn get(&self, id: &EvidenceId) -> bool {
        self.labels.get(id).copied().unwrap_or(false)
    }

    /// Ids of a granularity in canonical order with their labels.
    pub fn of_granularity(
        &self,
        granularity: crate::evidence::Granularity,
    ) -> impl Iterator<Item = (&EvidenceId, bool)> {
        self.labels
            .iter()
            .filter(move |(id, _)| id.granularity() == granularity)
            .map(|(id, y)| (id, *y))
    }
}

/// Answer type derived from distant labels; `Unanswerable` when no
/// candidate contains the answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoldType {
    InTable,
    InPassage,
    Unanswerable,
}

impl GoldType {
    pub fn as_answer_type(&self) -> Option<crate::table::AnswerType> {
        match self {
            GoldType::InTable => Some(crate::table::AnswerType::InTable),
            GoldType::InPassage => Some(crate::table::AnswerType::InPassage),
            GoldType::Unanswerable => None,
        }
    }
}

/// True iff the cell's value or any of its linked passages contains one of
/// the answers. This is the per-cell basis that row and column labels
/// aggregate, and the label a row-tagged cell instance trains against.
pub fn cell_region_contains<'a, F>(cell: &Cell, passage_text: &F, answers: &[String]) -> bool
where
    F: Fn(&str) -> &'a str,
{
    contains_answer(&cell.value, answers)
        || cell.link_ids.iter().any(|pid| contains_answer(passage_text(pid), answers))
}

/// Labels every candidate of the question's table:
/// a link by its passage, a cell by its value alone, a row or column by
/// whether any of its cells' values or linked passages contain the answer.
pub fn label_candidates<'a, F>(
    question: &Question,
    table: &HybridTable,
    passage_text: F,
) -> LabelSet
where
    F: Fn(&str) -> &'a str,
{
    let answers = &question.gold_answers;
    let mut labels = BTreeMap::new();
    for id in enumerate_candidates(table) {
        let y = match id {
            EvidenceId::Col { col } => (0..table.rows())
                .any(|row| cell_region_contains(table.cell(row, col), &passage_text, answers)),
            EvidenceId::Row { row } => (0..table.cols())
                .any(|col| cell_region_contains(table.cell(row, col), &passage_text, answers)),
            EvidenceId::Cell { row, col } => contains_answer(&table.cell(row, col).value, answers),
            EvidenceId::Link { row, col, link } => {
                let pid = &table.cell(row, col).link_ids[link];
                contains_answer(passage_text(pid), answers)
            }
        };
        labels.insert(id, y);
    }
    LabelSet { question_id: question.id.clone(), labels }
}

/// Labels one question against a validated dataset.
pub fn label_question(dataset: &Dataset, question: &Question) -> LabelSet {
    let table = dataset.table_for(question);
    label_candidates(question, table, |pid| {
        dataset.passage(pid).map(|p| p.text.as_str()).unwrap_or("")
    })
}

/// `InTable` if any cell label is set, else `InPassage` if any link label
/// is set, else `Unanswerable`. A cell hit wins because its value is
/// returned verbatim without a reader pass.
pub fn derive_gold_type(labels: &LabelSet) -> GoldType {
    let any = |g| labels.of_granularity(g).any(|(_, y)| y);
    if any(crate::evidence::Granularity::Cell) {
        GoldType::InTable
    } else if any(crate::evidence::Granularity::Link) {
        GoldType::InPassage
    } else {
        GoldType::Unanswerable
    }
}
