//! Random forest: bagged classification trees with per-node feature sampling.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{
    check_training_data, DecisionTree, FeatureMatrix, MaxFeatures, TreeConfig, TreeParams,
};
use crate::error::Result;
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub tree: TreeConfig,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            bootstrap: true,
            tree: TreeConfig {
                params: TreeParams {
                    max_depth: 12,
                    max_features: MaxFeatures::Sqrt,
                    ..TreeParams::default()
                },
                ..TreeConfig::default()
            },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_classes: usize,
    pub trees: Vec<DecisionTree>,
    /// Seed of each tree's bootstrap and feature-sampling stream.
    pub tree_seeds: Vec<u64>,
}

impl RandomForest {
    pub fn fit(
        x: &FeatureMatrix,
        y: &[usize],
        n_classes: usize,
        config: &ForestConfig,
    ) -> Result<Self> {
        check_training_data(x, y, n_classes)?;
        let n = y.len();
        let tree_seeds: Vec<u64> = (0..config.n_trees)
            .map(|t| seeds::sub_seed(config.seed, &format!("forest/tree/{t}")))
            .collect();
        let trees = tree_seeds
            .par_iter()
            .map(|&seed| {
                let mut rng = seeds::rng_for(seed, "bootstrap");
                let weights = config.bootstrap.then(|| {
                    let mut w = vec![0.0; n];
                    for _ in 0..n {
                        w[rng.gen_range(0..n)] += 1.0;
                    }
                    w
                });
                let mut feature_rng = seeds::rng_for(seed, "features");
                DecisionTree::fit_weighted(
                    x,
                    y,
                    n_classes,
                    &config.tree,
                    weights.as_deref(),
                    Some(&mut feature_rng),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_classes,
            trees,
            tree_seeds,
        })
    }

    /// Mean of the trees' leaf distributions.
    pub fn predict_proba(&self, row: &[(usize, f64)]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for (a, p) in acc.iter_mut().zip(tree.root.leaf_value(row)) {
                *a += p;
            }
        }
        let n = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }
}
