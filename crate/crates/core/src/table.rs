//! Domain types for hybrid question answering: tables with cell-linked
//! passages, questions, and the validated dataset container.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::text::normalize_text;

/// A free-text passage that table cells can link to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Passage {
    pub id: String,
    pub text: String,
}

/// One table cell: a value (possibly empty) plus an ordered list of passage
/// ids it links to.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Cell {
    pub value: String,
    pub link_ids: Vec<String>,
}

/// A table with `M` rows, `N` columns, and one header per column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridTable {
    pub id: String,
    pub headers: Vec<String>,
    pub cells: Vec<Vec<Cell>>,
}

impl HybridTable {
    pub fn rows(&self) -> usize {
        self.cells.len()
    }

    pub fn cols(&self) -> usize {
        self.headers.len()
    }

    pub fn cell(&self, row: usize, col: usize) -> &Cell {
        &self.cells[row][col]
    }
}

/// Where a question's answer lives: a table cell value or a linked passage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AnswerType {
    InTable,
    InPassage,
}

impl AnswerType {
    pub fn as_str(&self) -> &'static str {
        match self {
            AnswerType::InTable => "in_table",
            AnswerType::InPassage => "in_passage",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub id: String,
    pub table_id: String,
    pub text: String,
    pub gold_answers: Vec<String>,
    /// Declared answer type; absent for datasets that omit it (derived from
    /// distant labels instead).
    pub gold_type: Option<AnswerType>,
}

/// Validation failure naming the offending entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataError {
    EmptyTable { table_id: String },
    NoColumns { table_id: String },
    RaggedRow { table_id: String, row: usize },
    UnknownPassage { table_id: String, passage_id: String },
    EmptyPassage { passage_id: String },
    UnknownTable { question_id: String, table_id: String },
    DuplicateQuestion { question_id: String },
    NoAnswers { question_id: String },
    EmptyAnswer { question_id: String },
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::EmptyTable { table_id } => write!(f, "table {table_id} has no rows"),
            DataError::NoColumns { table_id } => write!(f, "table {table_id} has no columns"),
            DataError::RaggedRow { table_id, row } => {
                write!(f, "table {table_id} row {row} does not match header count")
            }
            DataError::UnknownPassage { table_id, passage_id } => {
                write!(f, "table {table_id} links unknown passage {passage_id}")
            }
            DataError::EmptyPassage { passage_id } => {
                write!(f, "passage {passage_id} has empty text")
            }
            DataError::UnknownTable { question_id, table_id } => {
                write!(f, "question {question_id} references unknown table {table_id}")
            }
            DataError::DuplicateQuestion { question_id } => {
                write!(f, "duplicate question id {question_id}")
            }
            DataError::NoAnswers { question_id } => {
                write!(f, "question {question_id} has no gold answers")
            }
            DataError::EmptyAnswer { question_id } => {
                write!(f, "question {question_id} has a gold answer that normalizes to nothing")
            }
        }
    }
}

impl core::error::Error for DataError {}

impl DataError {
    /// The id of the entity that failed validation.
    pub fn entity_id(&self) -> &str {
        match self {
            DataError::EmptyTable { table_id }
            | DataError::NoColumns { table_id }
            | DataError::RaggedRow { table_id, .. } => table_id,
            DataError::UnknownPassage { passage_id, .. }
            | DataError::EmptyPassage { passage_id } => passage_id,
            DataError::UnknownTable { question_id, .. }
            | DataError::DuplicateQuestion { question_id }
            | DataError::NoAnswers { question_id }
            | DataError::EmptyAnswer { question_id } => question_id,
        }
    }
}

/// A fully resolved corpus: tables, passages, and questions with every
/// reference checked. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    tables: BTreeMap<String, HybridTable>,
    passages: BTreeMap<String, Passage>,
    questions: Vec<Question>,
}

impl Dataset {
    /// Builds a dataset, checking every invariant. Errors name the entity
    /// that failed.
    pub fn new(
        tables: Vec<HybridTable>,
        passages: Vec<Passage>,
        questions: Vec<Question>,
    ) -> Result<Self, DataError> {
        let mut passage_map = BTreeMap::new();
        for p in passages {
            if normalize_is_empty_raw(&p.text) {
                return Err(DataError::EmptyPassage { passage_id: p.id });
            }
            passage_map.insert(p.id.clone(), p);
        }

        let mut table_map = BTreeMap::new();
        for t in tables {
            if t.headers.is_empty() {
                return Err(DataError::NoColumns { table_id: t.id });
            }
            if t.cells.is_empty() {
                return Err(DataError::EmptyTable { table_id: t.id });
            }
            for (i, row) in t.cells.iter().enumerate() {
                if row.len() != t.headers.len() {
                    return Err(DataError::RaggedRow { table_id: t.id, row: i });
                }
                for cell in row {
                    for link in &cell.link_ids {
                        if !passage_map.contains_key(link) {
                            return Err(DataError::UnknownPassage {
                                table_id: t.id,
                                passage_id: link.clone(),
                            });
                        }
                    }
                }
            }
            table_map.insert(t.id.clone(), t);
        }

        let mut seen = alloc::collections::BTreeSet::new();
        for q in &questions {
            if !seen.insert(q.id.clone()) {
                return Err(DataError::DuplicateQuestion { question_id: q.id.clone() });
            }
            if !table_map.contains_key(&q.table_id) {
                return Err(DataError::UnknownTable {
                    question_id: q.id.clone(),
                    table_id: q.table_id.clone(),
                });
            }
            if q.gold_answers.is_empty() {
                return Err(DataError::NoAnswers { question_id: q.id.clone() });
            }
            if q.gold_answers.iter().any(|a| normalize_text(a).is_empty()) {
                return Err(DataError::EmptyAnswer { question_id: q.id.clone() });
            }
        }

        Ok(Dataset { tables: table_map, passages: passage_map, questions })
    }

    pub fn tables(&self) -> &BTreeMap<String, HybridTable> {
        &self.tables
    }

    pub fn passages(&self) -> &BTreeMap<String, Passage> {
        &self.passages
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn table(&self, id: &str) -> Option<&HybridTable> {
        self.tables.get(id)
    }

    pub fn passage(&self, id: &str) -> Option<&Passage> {
        self.passages.get(id)
    }

    /// The table a question refers to. Valid by construction.
    pub fn table_for(&self, question: &Question) -> &HybridTable {
        &self.tables[&question.table_id]
    }
}

// A passage whose text normalizes to nothing carries no evidence; reject it
// up front along with literally empty text.
fn normalize_is_empty_raw(s: &str) -> bool {
    s.trim().is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    pub(crate) fn cell(value: &str, links: &[&str]) -> Cell {
        Cell {
            value: value.to_string(),
            link_ids: links.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn minimal() -> (Vec<HybridTable>, Vec<Passage>, Vec<Question>) {
        let table = HybridTable {
            id: "t0".to_string(),
            headers: vec!["H".to_string()],
            cells: vec![vec![cell("V", &["p0"])]],
        };
        let passage = Passage { id: "p0".to_string(), text: "some text".to_string() };
        let question = Question {
            id: "q0".to_string(),
            table_id: "t0".to_string(),
            text: "what".to_string(),
            gold_answers: vec!["V".to_string()],
            gold_type: None,
        };
        (vec![table], vec![passage], vec![question])
    }

    #[test]
    fn minimal_dataset_validates() {
        let (t, p, q) = minimal();
        let ds = Dataset::new(t, p, q).unwrap();
        assert_eq!(ds.tables().len(), 1);
        assert_eq!(ds.questions().len(), 1);
        assert_eq!(ds.table_for(&ds.questions()[0]).rows(), 1);
    }

    #[test]
    fn dangling_passage_ref_names_the_passage() {
        let (mut t, p, q) = minimal();
        t[0].cells[0][0].link_ids.push("p9".to_string());
        let err = Dataset::new(t, p, q).unwrap_err();
        assert_eq!(err.entity_id(), "p9");
        assert!(matches!(err, DataError::UnknownPassage { .. }));
    }

    #[test]
    fn ragged_row_rejected() {
        let (mut t, p, q) = minimal();
        t[0].cells.push(vec![]);
        let err = Dataset::new(t, p, q).unwrap_err();
        assert!(matches!(err, DataError::RaggedRow { row: 1, .. }));
    }

    #[test]
    fn unresolved_table_rejected() {
        let (t, p, mut q) = minimal();
        q[0].table_id = "missing".to_string();
        let err = Dataset::new(t, p, q).unwrap_err();
        assert!(matches!(err, DataError::UnknownTable { .. }));
    }

    #[test]
    fn duplicate_question_rejected() {
        let (t, p, mut q) = minimal();
        q.push(q[0].clone());
        let err = Dataset::new(t, p, q).unwrap_err();
        assert!(matches!(err, DataError::DuplicateQuestion { .. }));
    }

    #[test]
    fn answer_normalizing_to_nothing_rejected() {
        let (t, p, mut q) = minimal();
        q[0].gold_answers = vec!["the".to_string()];
        let err = Dataset::new(t, p, q).unwrap_err();
        assert!(matches!(err, DataError::EmptyAnswer { .. }));
    }
}
