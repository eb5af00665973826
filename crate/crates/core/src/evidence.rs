//! Evidence candidates at four granularities — column, row, cell, link —
//! with deterministic enumeration and input-sequence serialization.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::table::{HybridTable, Passage, Question};

/// The unit a retrieval candidate ranks over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Granularity {
    Col,
    Row,
    Cell,
    Link,
}

impl Granularity {
    pub const ALL: [Granularity; 4] =
        [Granularity::Col, Granularity::Row, Granularity::Cell, Granularity::Link];

    pub fn as_str(&self) -> &'static str {
        match self {
            Granularity::Col => "col",
            Granularity::Row => "row",
            Granularity::Cell => "cell",
            Granularity::Link => "link",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Coordinates of one evidence candidate. The derived ordering is the
/// canonical enumeration order: all columns by index, all rows by index,
/// cells row-major, links row-major then link index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EvidenceId {
    Col { col: usize },
    Row { row: usize },
    Cell { row: usize, col: usize },
    Link { row: usize, col: usize, link: usize },
}

impl EvidenceId {
    pub fn granularity(&self) -> Granularity {
        match self {
            EvidenceId::Col { .. } => Granularity::Col,
            EvidenceId::Row { .. } => Granularity::Row,
            EvidenceId::Cell { .. } => Granularity::Cell,
            EvidenceId::Link { .. } => Granularity::Link,
        }
    }

    /// Coordinates as written in label/score files: `[j]`, `[i]`, `[i,j]`,
    /// or `[i,j,x]`.
    pub fn coords(&self) -> Vec<usize> {
        match *self {
            EvidenceId::Col { col } => alloc::vec![col],
            EvidenceId::Row { row } => alloc::vec![row],
            EvidenceId::Cell { row, col } => alloc::vec![row, col],
            EvidenceId::Link { row, col, link } => alloc::vec![row, col, link],
        }
    }

    /// Rebuilds an id from a granularity tag and coordinate list, checking
    /// bounds against the table.
    pub fn from_coords(
        granularity: Granularity,
        coords: &[usize],
        table: &HybridTable,
    ) -> Option<EvidenceId> {
        let id = match (granularity, coords) {
            (Granularity::Col, &[col]) => EvidenceId::Col { col },
            (Granularity::Row, &[row]) => EvidenceId::Row { row },
            (Granularity::Cell, &[row, col]) => EvidenceId::Cell { row, col },
            (Granularity::Link, &[row, col, link]) => EvidenceId::Link { row, col, link },
            _ => return None,
        };
        id.in_bounds(table).then_some(id)
    }

    pub fn in_bounds(&self, table: &HybridTable) -> bool {
        match *self {
            EvidenceId::Col { col } => col < table.cols(),
            EvidenceId::Row { row } => row < table.rows(),
            EvidenceId::Cell { row, col } => row < table.rows() && col < table.cols(),
            EvidenceId::Link { row, col, link } => {
                row < table.rows()
                    && col < table.cols()
                    && link < table.cell(row, col).link_ids.len()
            }
        }
    }
}

impl fmt::Display for EvidenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            EvidenceId::Col { col } => write!(f, "col({col})"),
            EvidenceId::Row { row } => write!(f, "row({row})"),
            EvidenceId::Cell { row, col } => write!(f, "cell({row},{col})"),
            EvidenceId::Link { row, col, link } => write!(f, "link({row},{col},{link})"),
        }
    }
}

/// A candidate's serialized input sequence plus what the featurizer needs
/// alongside it: the bare content segment and the column header it sits
/// under (absent for link candidates, whose content is the passage alone).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvidenceCandidate {
    pub id: EvidenceId,
    pub serialized: String,
    pub content: String,
    pub header: Option<String>,
}

/// Every candidate id for a table, in canonical order: columns, rows,
/// cells row-major, links row-major then link index.
pub fn enumerate_candidates(table: &HybridTable) -> Vec<EvidenceId> {
    let mut out = Vec::new();
    for col in 0..table.cols() {
        out.push(EvidenceId::Col { col });
    }
    for row in 0..table.rows() {
        out.push(EvidenceId::Row { row });
    }
    for row in 0..table.rows() {
        for col in 0..table.cols() {
            out.push(EvidenceId::Cell { row, col });
        }
    }
    for row in 0..table.rows() {
        for col in 0..table.cols() {
            for link in 0..table.cell(row, col).link_ids.len() {
                out.push(EvidenceId::Link { row, col, link });
            }
        }
    }
    out
}

/// Serializes one candidate into its scorer input sequence
/// `[CLS] {tag} [SEP] {question} [SEP] {content}`.
///
/// Content per granularity: a column is its header; a link is its passage
/// text; a cell is its header, the full row of `header: value` pairs
/// (without their linked passages), and its own link texts. A row is not
/// one string — it expands to the cell-style serialization of each of its
/// cells under the `row` tag, so this returns N candidates for a row id
/// and exactly one otherwise.
///
/// Passage lookup is infallible for ids produced by [`enumerate_candidates`]
/// on a validated dataset.
pub fn serialize_candidate<'a, F>(
    question: &Question,
    table: &HybridTable,
    passage_text: F,
    id: EvidenceId,
) -> Vec<EvidenceCandidate>
where
    F: Fn(&str) -> &'a str,
{
    match id {
        EvidenceId::Col { col } => {
            let content = table.headers[col].clone();
            alloc::vec![assemble(id, Granularity::Col, question, content, Some(&table.headers[col]))]
        }
        EvidenceId::Link { row, col, link } => {
            let pid = &table.cell(row, col).link_ids[link];
            let content = passage_text(pid).to_string();
            alloc::vec![assemble(id, Granularity::Link, question, content, None)]
        }
        EvidenceId::Cell { row, col } => {
            let content = cell_content(table, &passage_text, row, col);
            alloc::vec![assemble(id, Granularity::Cell, question, content, Some(&table.headers[col]))]
        }
        EvidenceId::Row { row } => (0..table.cols())
            .map(|col| {
                let content = cell_content(table, &passage_text, row, col);
                assemble(id, Granularity::Row, question, content, Some(&table.headers[col]))
            })
            .collect(),
    }
}

fn assemble(
    id: EvidenceId,
    tag: Granularity,
    question: &Question,
    content: String,
    header: Option<&String>,
) -> EvidenceCandidate {
    let serialized = alloc::format!("[CLS] {} [SEP] {} [SEP] {}", tag, question.text, content);
    EvidenceCandidate { id, serialized, content, header: header.cloned() }
}

/// `{h_j} [SEP] {h_0}: {c_0} | … | {h_N-1}: {c_N-1} [SEP] {own link texts}`.
/// The final segment is empty when the cell has no links.
fn cell_content<'a, F>(table: &HybridTable, passage_text: &F, row: usize, col: usize) -> String
where
    F: Fn(&str) -> &'a str,
{
    let neighbors = table
        .headers
        .iter()
        .zip(&table.cells[row])
        .map(|(h, c)| alloc::format!("{}: {}", h, c.value))
        .collect::<Vec<_>>()
        .join(" | ");
    let links = table
        .cell(row, col)
        .link_ids
        .iter()
        .map(|pid| passage_text(pid))
        .collect::<Vec<_>>()
        .join(" [SEP] ");
    alloc::format!("{} [SEP] {} [SEP] {}", table.headers[col], neighbors, links)
}

/// Serializes every candidate of a table against one question, row ids
/// expanded. Candidates appear in canonical id order.
pub fn serialize_all<'a, F>(
    question: &Question,
    table: &HybridTable,
    passage_text: F,
) -> Vec<EvidenceCandidate>
where
    F: Fn(&str) -> &'a str,
{
    enumerate_candidates(table)
        .into_iter()
        .flat_map(|id| serialize_candidate(question, table, &passage_text, id))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Cell;
    use alloc::vec;

    fn table(headers: &[&str], grid: &[&[(&str, &[&str])]]) -> HybridTable {
        HybridTable {
            id: "t".to_string(),
            headers: headers.iter().map(|s| s.to_string()).collect(),
            cells: grid
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|(v, links)| Cell {
                            value: v.to_string(),
                            link_ids: links.iter().map(|s| s.to_string()).collect(),
                        })
                        .collect()
                })
                .collect(),
        }
    }

    fn q(text: &str) -> Question {
        Question {
            id: "q".to_string(),
            table_id: "t".to_string(),
            text: text.to_string(),
            gold_answers: vec!["x".to_string()],
            gold_type: None,
        }
    }

    #[test]
    fn one_by_one_no_links_enumerates_three() {
        let t = table(&["H"], &[&[("V", &[])]]);
        let ids = enumerate_candidates(&t);
        assert_eq!(
            ids,
            vec![
                EvidenceId::Col { col: 0 },
                EvidenceId::Row { row: 0 },
                EvidenceId::Cell { row: 0, col: 0 },
            ]
        );
    }

    #[test]
    fn two_by_three_single_links_enumerates_seventeen() {
        let t = table(
            &["A", "B", "C"],
            &[
                &[("a", &["p"]), ("b", &["p"]), ("c", &["p"])],
                &[("d", &["p"]), ("e", &["p"]), ("f", &["p"])],
            ],
        );
        assert_eq!(enumerate_candidates(&t).len(), 17);
    }

    #[test]
    fn link_counts_match_brute_force() {
        // 2x2 with per-cell link counts [[2,0],[1,3]]: 2+2+4+6 = 14.
        let t = table(
            &["A", "B"],
            &[
                &[("a", &["p", "p"]), ("b", &[])],
                &[("c", &["p"]), ("d", &["p", "p", "p"])],
            ],
        );
        let ids = enumerate_candidates(&t);
        // One-line oracle: count structural elements directly.
        let expected = t.cols()
            + t.rows()
            + t.rows() * t.cols()
            + t.cells.iter().flatten().map(|c| c.link_ids.len()).sum::<usize>();
        assert_eq!(ids.len(), expected);
        assert_eq!(ids.len(), 14);
    }

    #[test]
    fn enumeration_is_sorted_and_unique() {
        let t = table(
            &["A", "B"],
            &[&[("a", &["p"]), ("b", &[])], &[("c", &[]), ("d", &["p", "p"])]],
        );
        let ids = enumerate_candidates(&t);
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn col_serialization_ordering() {
        let t = table(&["Champion"], &[&[("V", &[])]]);
        let cands = serialize_candidate(&q("who won"), &t, |_| "", EvidenceId::Col { col: 0 });
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].serialized, "[CLS] col [SEP] who won [SEP] Champion");
    }

    #[test]
    fn cell_serialization_with_no_links_ends_with_empty_segment() {
        let t = table(&["H"], &[&[("V", &[])]]);
        let cands = serialize_candidate(&q("q"), &t, |_| "", EvidenceId::Cell { row: 0, col: 0 });
        assert_eq!(cands[0].serialized, "[CLS] cell [SEP] q [SEP] H [SEP] H: V [SEP] ");
    }

    #[test]
    fn link_serialization_is_passage_text() {
        let t = table(&["H"], &[&[("V", &["p0"])]]);
        let cands = serialize_candidate(
            &q("q"),
            &t,
            |_| "passage body",
            EvidenceId::Link { row: 0, col: 0, link: 0 },
        );
        assert_eq!(cands[0].serialized, "[CLS] link [SEP] q [SEP] passage body");
        assert_eq!(cands[0].header, None);
    }

    #[test]
    fn row_expands_to_cell_style_candidates() {
        let t = table(&["A", "B"], &[&[("a", &[]), ("b", &["p0"])]]);
        let cands = serialize_candidate(&q("q"), &t, |_| "ptext", EvidenceId::Row { row: 0 });
        assert_eq!(cands.len(), 2);
        assert_eq!(cands[0].serialized, "[CLS] row [SEP] q [SEP] A [SEP] A: a | B: b [SEP] ");
        assert_eq!(cands[1].serialized, "[CLS] row [SEP] q [SEP] B [SEP] A: a | B: b [SEP] ptext");
        assert!(cands.iter().all(|c| c.id == EvidenceId::Row { row: 0 }));
    }

    #[test]
    fn multi_link_cell_joins_passages_in_dataset_order() {
        let t = table(&["H"], &[&[("V", &["p0", "p1"])]]);
        let lookup = |pid: &str| if pid == "p0" { "first" } else { "second" };
        let cands = serialize_candidate(&q("q"), &t, lookup, EvidenceId::Cell { row: 0, col: 0 });
        assert_eq!(
            cands[0].serialized,
            "[CLS] cell [SEP] q [SEP] H [SEP] H: V [SEP] first [SEP] second"
        );
    }
}
