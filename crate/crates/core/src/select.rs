//! Evidence selection: fuse per-granularity scores into per-cell table and
//! passage scores, take global maxima, decide the answer type, and
//! navigate the cell or link the reader should consume.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::evidence::EvidenceId;
use crate::scoring::ScoreSet;
use crate::table::{AnswerType, HybridTable};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncompleteScores {
    pub question_id: String,
    pub missing: EvidenceId,
}

impl fmt::Display for IncompleteScores {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "scores for question {} miss candidate {}", self.question_id, self.missing)
    }
}

impl core::error::Error for IncompleteScores {}

/// Fused per-cell scores. `s_pass` and `best_link` are absent exactly for
/// cells without links, which the passage-side maximization skips.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedScores {
    pub s_tab: Vec<Vec<f64>>,
    pub s_pass: Vec<Vec<Option<f64>>>,
    pub best_link: Vec<Vec<Option<usize>>>,
}

/// The fine-grained evidence handed to the reader: the chosen cell, plus
/// the chosen link when the answer type is in-passage.
#[derive(Debug, Clone, PartialEq)]
pub struct Navigation {
    pub answer_type: AnswerType,
    pub cell: (usize, usize),
    pub link_index: Option<usize>,
    pub s_tab: f64,
    pub s_pass: Option<f64>,
}

/// Per-cell fusion: `s_tab = (col + row) + cell` and
/// `s_pass = (col + row) + max over the cell's link scores`, summed in
/// exactly that order so results are bit-comparable. Link ties resolve to
/// the lowest index.
pub fn fuse_scores(scores: &ScoreSet, table: &HybridTable) -> Result<FusedScores, IncompleteScores> {
    let need = |id: EvidenceId| {
        scores
            .get(&id)
            .ok_or(IncompleteScores { question_id: scores.question_id.clone(), missing: id })
    };

    let rows = table.rows();
    let cols = table.cols();
    let mut s_tab = Vec::with_capacity(rows);
    let mut s_pass = Vec::with_capacity(rows);
    let mut best_link = Vec::with_capacity(rows);

    for row in 0..rows {
        let row_score = need(EvidenceId::Row { row })?;
        let mut tab_row = Vec::with_capacity(cols);
        let mut pass_row = Vec::with_capacity(cols);
        let mut link_row = Vec::with_capacity(cols);
        for col in 0..cols {
            let col_score = need(EvidenceId::Col { col })?;
            let cell_score = need(EvidenceId::Cell { row, col })?;
            tab_row.push((col_score + row_score) + cell_score);

            let n_links = table.cell(row, col).link_ids.len();
            let mut best: Option<(usize, f64)> = None;
            for link in 0..n_links {
                let s = need(EvidenceId::Link { row, col, link })?;
                match best {
                    Some((_, bs)) if s <= bs => {}
                    _ => best = Some((link, s)),
                }
            }
            match best {
                Some((idx, s)) => {
                    pass_row.push(Some((col_score + row_score) + s));
                    link_row.push(Some(idx));
                }
                None => {
                    pass_row.push(None);
                    link_row.push(None);
                }
            }
        }
        s_tab.push(tab_row);
        s_pass.push(pass_row);
        best_link.push(link_row);
    }
    Ok(FusedScores { s_tab, s_pass, best_link })
}

/// Global maxima of the fused grids with their argmax cells; ties resolve
/// to the lowest (row, column). The passage side is absent when no cell
/// has links.
pub fn global_best(fused: &FusedScores) -> ((f64, (usize, usize)), Option<(f64, (usize, usize))>) {
    let mut best_tab: Option<(f64, (usize, usize))> = None;
    let mut best_pass: Option<(f64, (usize, usize))> = None;
    for (i, row) in fused.s_tab.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            match best_tab {
                Some((bs, _)) if *s <= bs => {}
                _ => best_tab = Some((*s, (i, j))),
            }
        }
    }
    for (i, row) in fused.s_pass.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            if let Some(s) = s {
                match best_pass {
                    Some((bs, _)) if *s <= bs => {}
                    _ => best_pass = Some((*s, (i, j))),
                }
            }
        }
    }
    (best_tab.expect("fused grid is non-empty"), best_pass)
}

/// In-passage iff a passage candidate exists and `s_tab <= s_pass`;
/// in-table otherwise. Ties go to the passage side.
pub fn decide_answer_type(s_tab: f64, s_pass: Option<f64>) -> AnswerType {
    match s_pass {
        Some(p) if s_tab <= p => AnswerType::InPassage,
        _ => AnswerType::InTable,
    }
}

/// Fuses, takes global maxima, decides the answer type, and returns the
/// navigated evidence. Deterministic under the stated tie rules.
pub fn navigate(scores: &ScoreSet, table: &HybridTable) -> Result<Navigation, IncompleteScores> {
    let fused = fuse_scores(scores, table)?;
    let ((tab_score, tab_cell), pass) = global_best(&fused);
    let answer_type = decide_answer_type(tab_score, pass.map(|(s, _)| s));
    let nav = match answer_type {
        AnswerType::InTable => Navigation {
            answer_type,
            cell: tab_cell,
            link_index: None,
            s_tab: tab_score,
            s_pass: pass.map(|(s, _)| s),
        },
        AnswerType::InPassage => {
            let (pass_score, pass_cell) = pass.expect("in-passage decision implies a link");
            Navigation {
                answer_type,
                cell: pass_cell,
                link_index: fused.best_link[pass_cell.0][pass_cell.1],
                s_tab: tab_score,
                s_pass: Some(pass_score),
            }
        }
    };
    Ok(nav)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Cell;
    use alloc::collections::BTreeMap;
    use alloc::string::ToString;
    use alloc::vec;

    fn table(link_counts: &[&[usize]]) -> HybridTable {
        HybridTable {
            id: "t".to_string(),
            headers: (0..link_counts[0].len()).map(|j| alloc::format!("h{j}")).collect(),
            cells: link_counts
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|n| Cell {
                            value: "v".to_string(),
                            link_ids: (0..*n).map(|k| alloc::format!("p{k}")).collect(),
                        })
                        .collect()
                })
                .collect(),
        }
    }

    fn score_set(pairs: &[(EvidenceId, f64)]) -> ScoreSet {
        ScoreSet {
            question_id: "q".to_string(),
            scores: pairs.iter().cloned().collect::<BTreeMap<_, _>>(),
        }
    }

    #[test]
    fn one_by_one_sums_and_omits_passless_cells() {
        let t = table(&[&[0]]);
        let s = score_set(&[
            (EvidenceId::Col { col: 0 }, 0.1),
            (EvidenceId::Row { row: 0 }, 0.3),
            (EvidenceId::Cell { row: 0, col: 0 }, 0.5),
        ]);
        let fused = fuse_scores(&s, &t).unwrap();
        assert_eq!(fused.s_tab[0][0], 0.9);
        assert_eq!(fused.s_pass[0][0], None);
        let (tab, pass) = global_best(&fused);
        assert_eq!(tab, (0.9, (0, 0)));
        assert_eq!(pass, None);
        assert_eq!(decide_answer_type(tab.0, None), AnswerType::InTable);
    }

    #[test]
    fn link_max_takes_lowest_index_on_tie() {
        let t = table(&[&[3]]);
        let s = score_set(&[
            (EvidenceId::Col { col: 0 }, 0.0),
            (EvidenceId::Row { row: 0 }, 0.0),
            (EvidenceId::Cell { row: 0, col: 0 }, 0.0),
            (EvidenceId::Link { row: 0, col: 0, link: 0 }, 0.2),
            (EvidenceId::Link { row: 0, col: 0, link: 1 }, 0.7),
            (EvidenceId::Link { row: 0, col: 0, link: 2 }, 0.7),
        ]);
        let fused = fuse_scores(&s, &t).unwrap();
        assert_eq!(fused.s_pass[0][0], Some(0.7));
        assert_eq!(fused.best_link[0][0], Some(1));
    }

    #[test]
    fn missing_candidate_is_reported() {
        let t = table(&[&[1]]);
        let s = score_set(&[
            (EvidenceId::Col { col: 0 }, 0.1),
            (EvidenceId::Row { row: 0 }, 0.1),
            (EvidenceId::Cell { row: 0, col: 0 }, 0.1),
        ]);
        let err = fuse_scores(&s, &t).unwrap_err();
        assert_eq!(err.missing, EvidenceId::Link { row: 0, col: 0, link: 0 });
    }

    #[test]
    fn global_tab_tie_prefers_lower_row_then_col() {
        let fused = FusedScores {
            s_tab: vec![vec![0.5, 0.9], vec![0.9, 0.1]],
            s_pass: vec![vec![None, None], vec![None, None]],
            best_link: vec![vec![None, None], vec![None, None]],
        };
        let (tab, _) = global_best(&fused);
        assert_eq!(tab, (0.9, (0, 1)));
    }

    #[test]
    fn tie_between_tab_and_pass_goes_in_passage() {
        assert_eq!(decide_answer_type(0.9, Some(0.3)), AnswerType::InTable);
        assert_eq!(decide_answer_type(0.5, Some(0.5)), AnswerType::InPassage);
        assert_eq!(decide_answer_type(0.2, None), AnswerType::InTable);
    }

    #[test]
    fn navigate_follows_oracle_labels_to_in_table_cell() {
        // Scores equal to distant labels squeezed into (0,1): answer in
        // cell (2,1) of a 3x2 table.
        let t = table(&[&[0, 0], &[0, 0], &[0, 1]]);
        let hit = 0.75;
        let miss = 0.25;
        let mut pairs = vec![
            (EvidenceId::Col { col: 0 }, miss),
            (EvidenceId::Col { col: 1 }, hit),
            (EvidenceId::Row { row: 0 }, miss),
            (EvidenceId::Row { row: 1 }, miss),
            (EvidenceId::Row { row: 2 }, hit),
            (EvidenceId::Link { row: 2, col: 1, link: 0 }, miss),
        ];
        for i in 0..3 {
            for j in 0..2 {
                pairs.push((
                    EvidenceId::Cell { row: i, col: j },
                    if (i, j) == (2, 1) { hit } else { miss },
                ));
            }
        }
        let nav = navigate(&score_set(&pairs), &t).unwrap();
        assert_eq!(nav.answer_type, AnswerType::InTable);
        assert_eq!(nav.cell, (2, 1));
        assert_eq!(nav.link_index, None);
    }

    #[test]
    fn navigate_follows_oracle_labels_to_link_of_cell_2_0() {
        // Answer only in the first link of cell (2,0): navigation lands on
        // that link.
        let t = table(&[&[0, 0], &[0, 0], &[2, 0]]);
        let hit = 0.75;
        let miss = 0.25;
        let mut pairs = vec![
            (EvidenceId::Col { col: 0 }, hit),
            (EvidenceId::Col { col: 1 }, miss),
            (EvidenceId::Row { row: 0 }, miss),
            (EvidenceId::Row { row: 1 }, miss),
            (EvidenceId::Row { row: 2 }, hit),
            (EvidenceId::Link { row: 2, col: 0, link: 0 }, hit),
            (EvidenceId::Link { row: 2, col: 0, link: 1 }, miss),
        ];
        for i in 0..3 {
            for j in 0..2 {
                pairs.push((EvidenceId::Cell { row: i, col: j }, miss));
            }
        }
        let nav = navigate(&score_set(&pairs), &t).unwrap();
        assert_eq!(nav.answer_type, AnswerType::InPassage);
        assert_eq!(nav.cell, (2, 0));
        assert_eq!(nav.link_index, Some(0));
    }
}
