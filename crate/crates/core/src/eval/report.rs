//! Text, CSV and JSON renderings of evaluation results.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{EvalResult, WeightedScores};

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:>w$}"))
            .collect();
        format!("| {} |", padded.join(" | "))
    };
    let rule = format!(
        "|{}|",
        widths
            .iter()
            .map(|w| "-".repeat(w + 2))
            .collect::<Vec<_>>()
            .join("|")
    );
    let mut out = String::new();
    writeln!(out, "{}", line(header)).unwrap();
    writeln!(out, "{rule}").unwrap();
    for row in rows {
        writeln!(out, "{}", line(row)).unwrap();
    }
    out
}

fn weighted_row(label: &str, w: &WeightedScores) -> Vec<String> {
    vec![label.to_owned(), pct(w.precision), pct(w.recall), pct(w.f1)]
}

/// Accuracy, per-level and weighted scores as aligned text.
pub fn render_text(title: &str, result: &EvalResult) -> String {
    let mut out = String::new();
    writeln!(out, "{title} (n = {})", result.n).unwrap();
    writeln!(out).unwrap();
    out.push_str(&render_table(
        &["Majority Vote".into(), "All Selections".into()],
        &[vec![
            pct(result.majority_vote_acc),
            pct(result.all_selections_acc),
        ]],
    ));
    writeln!(out).unwrap();
    let rows: Vec<Vec<String>> = result
        .per_level
        .iter()
        .map(|(level, s)| {
            vec![
                level.to_string(),
                s.support.to_string(),
                pct(s.precision),
                pct(s.recall),
                pct(s.f1),
            ]
        })
        .collect();
    out.push_str(&render_table(
        &[
            "Level".into(),
            "Support".into(),
            "Precision".into(),
            "Recall".into(),
            "F1".into(),
        ],
        &rows,
    ));
    writeln!(out).unwrap();
    out.push_str(&render_table(
        &[
            "Weighting".into(),
            "Weighted Avg. Precision".into(),
            "Weighted Avg. Recall".into(),
            "Weighted Avg. F1".into(),
        ],
        &[
            weighted_row("support", &result.weighted_support),
            weighted_row("literal (1/N_i)", &result.weighted_literal),
        ],
    ));
    out
}

/// Confusion matrix as CSV: one row per true level with counts followed by
/// row-normalized rates.
pub fn render_confusion_csv(result: &EvalResult) -> String {
    let cm = &result.confusion;
    let mut out = String::from("true_level");
    for j in 1..=cm.levels {
        write!(out, ",count_pred_{j}").unwrap();
    }
    for j in 1..=cm.levels {
        write!(out, ",rate_pred_{j}").unwrap();
    }
    out.push('\n');
    for (i, (counts, rates)) in cm.counts.iter().zip(&cm.normalized).enumerate() {
        write!(out, "{}", i + 1).unwrap();
        for c in counts {
            write!(out, ",{c}").unwrap();
        }
        for r in rates {
            write!(out, ",{r:.6}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// One row of a sweep over the maximum number of candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub max_candidates: usize,
    /// Fraction of the test split retained at this C.
    pub dataset_fraction: f64,
    /// `(model name, result)` in display order.
    pub results: Vec<(String, EvalResult)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMetric {
    MajorityVote,
    AllSelections,
}

/// Accuracy by C and model, plus the retained dataset share.
pub fn render_sweep_table(rows: &[SweepRow], metric: SweepMetric) -> String {
    let Some(first) = rows.first() else {
        return String::new();
    };
    let mut header = vec!["C".to_owned()];
    header.extend(first.results.iter().map(|(name, _)| name.clone()));
    header.push("Dataset %".into());
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            let mut cells = vec![row.max_candidates.to_string()];
            cells.extend(row.results.iter().map(|(_, r)| {
                pct(match metric {
                    SweepMetric::MajorityVote => r.majority_vote_acc,
                    SweepMetric::AllSelections => r.all_selections_acc,
                })
            }));
            cells.push(pct(row.dataset_fraction));
            cells
        })
        .collect();
    render_table(&header, &body)
}

/// Weighted precision/recall/F1 of one model across C.
pub fn render_weighted_sweep(rows: &[SweepRow], model: &str) -> String {
    let header = [
        "C".to_owned(),
        "Weighted Avg. Precision".into(),
        "Weighted Avg. Recall".into(),
        "Weighted Avg. F1".into(),
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .filter_map(|row| {
            let (_, r) = row.results.iter().find(|(name, _)| name == model)?;
            let w = &r.weighted_support;
            Some(vec![
                row.max_candidates.to_string(),
                pct(w.precision),
                pct(w.recall),
                pct(w.f1),
            ])
        })
        .collect();
    render_table(&header, &body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::confusion_matrix;
    use std::collections::BTreeMap;

    fn dummy() -> EvalResult {
        let w = WeightedScores {
            precision: 0.5,
            recall: 0.25,
            f1: 1.0 / 3.0,
            excluded_levels: vec![],
        };
        EvalResult {
            n: 4,
            majority_vote_acc: 0.7781,
            all_selections_acc: 0.812,
            per_level: BTreeMap::new(),
            weighted_literal: w.clone(),
            weighted_support: w,
            confusion: confusion_matrix(&[1, 2], &[1, 1], 2),
        }
    }

    #[test]
    fn sweep_table_layout() {
        let rows = vec![SweepRow {
            max_candidates: 7,
            dataset_fraction: 0.934,
            results: vec![("Context aware".into(), dummy())],
        }];
        let t = render_sweep_table(&rows, SweepMetric::MajorityVote);
        assert!(t.contains("Context aware"));
        assert!(t.contains("77.81%"));
        assert!(t.contains("93.40%"));
        let w = render_weighted_sweep(&rows, "Context aware");
        assert!(w.contains("25.00%"));
    }

    #[test]
    fn confusion_csv() {
        let csv = render_confusion_csv(&dummy());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "true_level,count_pred_1,count_pred_2,rate_pred_1,rate_pred_2"
        );
        assert_eq!(lines[1], "1,1,1,0.500000,0.500000");
        assert_eq!(lines[2], "2,0,0,0.000000,0.000000");
    }
}
