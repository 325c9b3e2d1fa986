//! Multinomial logistic regression trained by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use super::softmax_in_place;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    /// L2 penalty on weights (not biases).
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            learning_rate: 0.5,
            l2: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub n_classes: usize,
    /// `weights[k][j]` for class `k`, input `j`.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LogisticModel {
    pub fn fit(
        x: &[Vec<f64>],
        y: &[usize],
        n_classes: usize,
        config: &LogisticConfig,
    ) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        let dim = x[0].len();
        let n = x.len() as f64;
        let mut model = Self {
            n_classes,
            weights: vec![vec![0.0; dim]; n_classes],
            bias: vec![0.0; n_classes],
        };
        for _ in 0..config.iterations {
            let mut grad_w = vec![vec![0.0; dim]; n_classes];
            let mut grad_b = vec![0.0; n_classes];
            for (row, &label) in x.iter().zip(y) {
                let p = model.predict_proba(row);
                for k in 0..n_classes {
                    let err = p[k] - if k == label { 1.0 } else { 0.0 };
                    grad_b[k] += err / n;
                    for (g, v) in grad_w[k].iter_mut().zip(row) {
                        *g += err * v / n;
                    }
                }
            }
            for k in 0..n_classes {
                model.bias[k] -= config.learning_rate * grad_b[k];
                for (w, g) in model.weights[k].iter_mut().zip(&grad_w[k]) {
                    *w -= config.learning_rate * (g + config.l2 * *w);
                }
            }
        }
        Ok(model)
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut z: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| b + w.iter().zip(row).map(|(w, v)| w * v).sum::<f64>())
            .collect();
        softmax_in_place(&mut z);
        z
    }
}
