//! Multinomial gradient boosting with second-order regression trees.
//!
//! Each round fits one tree per class to the softmax cross-entropy gradient
//! `p_k − y_k` with hessian `p_k (1 − p_k)`; leaves take the Newton step
//! scaled by `(K − 1) / K`. Scores start at the log class prior.

use serde::{Deserialize, Serialize};

use super::softmax_in_place;
use super::tree::{check_training_data, FeatureMatrix, Grower, NewtonRegression, Node, TreeParams};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    pub tree: TreeParams,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            learning_rate: 0.1,
            lambda: 1.0,
            tree: TreeParams {
                max_depth: 3,
                ..TreeParams::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub n_classes: usize,
    pub learning_rate: f64,
    /// Training class frequencies; the initial score is their logarithm.
    pub prior: Vec<f64>,
    /// `rounds[r][k]` is round `r`'s tree for class `k`.
    pub rounds: Vec<Vec<Node>>,
}

impl BoostedModel {
    pub fn fit(
        x: &FeatureMatrix,
        y: &[usize],
        n_classes: usize,
        config: &BoostConfig,
    ) -> Result<Self> {
        check_training_data(x, y, n_classes)?;
        let n = y.len();
        let mut prior = vec![0.0; n_classes];
        for &c in y {
            prior[c] += 1.0;
        }
        prior.iter_mut().for_each(|p| *p /= n as f64);

        let mut model = Self {
            n_classes,
            learning_rate: config.learning_rate,
            prior,
            rounds: Vec::with_capacity(config.n_rounds),
        };
        let init: Vec<f64> = model.prior.iter().map(|p| p.ln()).collect();
        let mut scores: Vec<Vec<f64>> = vec![init; n];
        let rows: Vec<(usize, f64)> = (0..n).map(|i| (i, 1.0)).collect();
        let leaf_scale = if n_classes > 1 {
            (n_classes as f64 - 1.0) / n_classes as f64
        } else {
            1.0
        };

        for _ in 0..config.n_rounds {
            let probs: Vec<Vec<f64>> = scores
                .iter()
                .map(|s| {
                    let mut p = s.clone();
                    softmax_in_place(&mut p);
                    p
                })
                .collect();
            let mut round = Vec::with_capacity(n_classes);
            #[allow(clippy::needless_range_loop)]
            for k in 0..n_classes {
                let grad: Vec<f64> = (0..n)
                    .map(|i| probs[i][k] - if y[i] == k { 1.0 } else { 0.0 })
                    .collect();
                let hess: Vec<f64> = (0..n).map(|i| probs[i][k] * (1.0 - probs[i][k])).collect();
                let objective = NewtonRegression {
                    grad: &grad,
                    hess: &hess,
                    lambda: config.lambda,
                    leaf_scale,
                };
                let mut grower = Grower {
                    objective: &objective,
                    x,
                    params: TreeParams {
                        max_features: super::tree::MaxFeatures::All,
                        ..config.tree
                    },
                    rng: None,
                };
                round.push(grower.grow(&rows));
            }
            for (i, s) in scores.iter_mut().enumerate() {
                for (k, tree) in round.iter().enumerate() {
                    s[k] += config.learning_rate * tree.leaf_value(x.row(i))[0];
                }
            }
            model.rounds.push(round);
        }
        Ok(model)
    }

    pub fn predict_proba(&self, row: &[(usize, f64)]) -> Vec<f64> {
        let mut scores: Vec<f64> = self.prior.iter().map(|p| p.ln()).collect();
        for round in &self.rounds {
            for (s, tree) in scores.iter_mut().zip(round) {
                *s += self.learning_rate * tree.leaf_value(row)[0];
            }
        }
        softmax_in_place(&mut scores);
        scores
    }
}
