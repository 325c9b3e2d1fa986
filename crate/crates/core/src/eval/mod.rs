//! Majority-vote / all-selections accuracy, per-level precision, recall and
//! F1, weighted averages and confusion matrices.
//!
//! Per-level scores are computed against majority labels only. Two weighted
//! averages are reported side by side:
//!
//! * `literal`: `Σ_i Score_i / N_i` (inverse-support weights, unnormalized);
//! * `support`: `Σ_i (N_i / N) · Score_i` (the usual support-weighted mean).
//!
//! Levels with zero support are left out of both sums and listed in
//! [`WeightedScores::excluded_levels`].

pub mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::PiiRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightingMode {
    Literal,
    Support,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Records whose majority level is this level (`N_i`).
    pub support: usize,
    pub predicted: usize,
    pub true_positive: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub excluded_levels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// Number of levels; row/column `k` is level `k + 1`.
    pub levels: usize,
    /// `counts[true - 1][predicted - 1]`.
    pub counts: Vec<Vec<usize>>,
    /// Rows divided by their sums; all-zero rows stay zero.
    pub normalized: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub n: usize,
    pub majority_vote_acc: f64,
    pub all_selections_acc: f64,
    pub per_level: BTreeMap<usize, LevelScores>,
    pub weighted_literal: WeightedScores,
    pub weighted_support: WeightedScores,
    pub confusion: ConfusionMatrix,
}

/// Confusion matrix over levels `1..=levels`.
pub fn confusion_matrix(predictions: &[usize], truth: &[usize], levels: usize) -> ConfusionMatrix {
    let mut counts = vec![vec![0usize; levels]; levels];
    for (&p, &t) in predictions.iter().zip(truth) {
        assert!(
            (1..=levels).contains(&p) && (1..=levels).contains(&t),
            "level outside 1..={levels}: predicted {p}, true {t}"
        );
        counts[t - 1][p - 1] += 1;
    }
    let normalized = counts
        .iter()
        .map(|row| {
            let total: usize = row.iter().sum();
            row.iter()
                .map(|&c| {
                    if total == 0 {
                        0.0
                    } else {
                        c as f64 / total as f64
                    }
                })
                .collect()
        })
        .collect();
    ConfusionMatrix {
        levels,
        counts,
        normalized,
    }
}

/// Weighted average of per-level `(score, support)` pairs.
///
/// Zero-support levels are skipped in both modes.
pub fn weighted_scores(scores: &[(f64, usize)], mode: WeightingMode) -> f64 {
    let included = scores.iter().filter(|(_, n)| *n > 0);
    match mode {
        WeightingMode::Literal => included.map(|&(s, n)| s / n as f64).sum(),
        WeightingMode::Support => {
            let total: usize = scores.iter().map(|(_, n)| n).sum();
            if total == 0 {
                return 0.0;
            }
            included.map(|&(s, n)| n as f64 * s).sum::<f64>() / total as f64
        }
    }
}

/// Weighted precision, recall and F1 over `per_level`.
pub fn weighted_prf(
    per_level: &BTreeMap<usize, LevelScores>,
    mode: WeightingMode,
) -> WeightedScores {
    let pick = |f: fn(&LevelScores) -> f64| -> Vec<(f64, usize)> {
        per_level.values().map(|s| (f(s), s.support)).collect()
    };
    let excluded_levels = per_level
        .iter()
        .filter(|(_, s)| s.support == 0)
        .map(|(&l, _)| l)
        .collect();
    let recall = match mode {
        WeightingMode::Literal => weighted_scores(&pick(|s| s.recall), mode),
        // N_i · (TP_i / N_i) = TP_i, so the support-weighted recall is the
        // total true-positive count over N.
        WeightingMode::Support => {
            let total: usize = per_level.values().map(|s| s.support).sum();
            let tp: usize = per_level.values().map(|s| s.true_positive).sum();
            if total == 0 {
                0.0
            } else {
                tp as f64 / total as f64
            }
        }
    };
    WeightedScores {
        precision: weighted_scores(&pick(|s| s.precision), mode),
        recall,
        f1: weighted_scores(&pick(|s| s.f1), mode),
        excluded_levels,
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Evaluate with the level range inferred from labels and predictions.
pub fn evaluate(predictions: &[usize], records: &[PiiRecord]) -> Result<EvalResult> {
    let levels = records
        .iter()
        .map(|r| r.majority_level)
        .chain(predictions.iter().copied())
        .max()
        .unwrap_or(1);
    evaluate_with_levels(predictions, records, levels)
}

/// Evaluate over the fixed level range `1..=levels`.
pub fn evaluate_with_levels(
    predictions: &[usize],
    records: &[PiiRecord],
    levels: usize,
) -> Result<EvalResult> {
    if predictions.len() != records.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: records.len(),
        });
    }
    let truth: Vec<usize> = records.iter().map(|r| r.majority_level).collect();
    if let Some(bad) = predictions
        .iter()
        .chain(&truth)
        .find(|l| !(1..=levels).contains(*l))
    {
        return Err(Error::InvalidConfig(format!(
            "level {bad} outside 1..={levels}"
        )));
    }
    let n = records.len();
    let majority_hits = predictions
        .iter()
        .zip(&truth)
        .filter(|(p, t)| p == t)
        .count();
    let all_hits = predictions
        .iter()
        .zip(records)
        .filter(|(p, r)| r.all_levels.contains(p))
        .count();

    let confusion = confusion_matrix(predictions, &truth, levels);
    let per_level: BTreeMap<usize, LevelScores> = (1..=levels)
        .map(|level| {
            let k = level - 1;
            let tp = confusion.counts[k][k];
            let support: usize = confusion.counts[k].iter().sum();
            let predicted: usize = confusion.counts.iter().map(|row| row[k]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            (
                level,
                LevelScores {
                    precision,
                    recall,
                    f1,
                    support,
                    predicted,
                    true_positive: tp,
                },
            )
        })
        .collect();

    Ok(EvalResult {
        n,
        majority_vote_acc: ratio(majority_hits, n),
        all_selections_acc: ratio(all_hits, n),
        weighted_literal: weighted_prf(&per_level, WeightingMode::Literal),
        weighted_support: weighted_prf(&per_level, WeightingMode::Support),
        per_level,
        confusion,
    })
}
