//! Two-layer stacking: layer-1 classifiers produce out-of-fold class
//! distributions, a multinomial logistic meta-classifier learns from them,
//! and the layer-1 models are then refit on all data.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logistic::{LogisticConfig, LogisticModel};
use super::tree::{check_training_data, FeatureMatrix};
use super::{Classifier, ClassifierSpec};
use crate::error::{Error, Result};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StackingConfig {
    pub layer1: Vec<ClassifierSpec>,
    pub folds: usize,
    pub meta: LogisticConfig,
    pub seed: u64,
}

impl Default for StackingConfig {
    fn default() -> Self {
        use super::boosting::BoostConfig;
        use super::forest::ForestConfig;
        use super::tree::{Criterion, TreeConfig, TreeParams};
        let entropy_forest = ForestConfig {
            tree: TreeConfig {
                criterion: Criterion::Entropy,
                ..ForestConfig::default().tree
            },
            ..ForestConfig::default()
        };
        Self {
            layer1: vec![
                ClassifierSpec::Forest(ForestConfig::default()),
                ClassifierSpec::Forest(entropy_forest),
                ClassifierSpec::Boosted(BoostConfig::default()),
                ClassifierSpec::Tree(TreeConfig {
                    criterion: Criterion::Entropy,
                    params: TreeParams {
                        max_depth: 6,
                        ..TreeParams::default()
                    },
                }),
            ],
            folds: 5,
            meta: LogisticConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackingModel {
    pub n_classes: usize,
    pub layer1: Vec<Classifier>,
    pub meta: LogisticModel,
}

/// Stratified fold index per row. Rows of each class are shuffled and dealt
/// round-robin, continuing the deal across classes.
pub fn stratified_folds(y: &[usize], n_classes: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = seeds::rng_for(seed, "folds");
    let mut assignment = vec![0; y.len()];
    let mut next = 0;
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

/// Does every fold's training part contain every class present in `y`?
fn folds_cover_classes(y: &[usize], n_classes: usize, assignment: &[usize], folds: usize) -> bool {
    let mut total = vec![0usize; n_classes];
    let mut per_fold = vec![vec![0usize; n_classes]; folds];
    for (&c, &f) in y.iter().zip(assignment) {
        total[c] += 1;
        per_fold[f][c] += 1;
    }
    per_fold
        .iter()
        .all(|fold| (0..n_classes).all(|c| total[c] == 0 || total[c] > fold[c]))
}

fn spec_seed(seed: u64, model: usize, fold: Option<usize>) -> u64 {
    match fold {
        Some(f) => seeds::sub_seed(seed, &format!("layer1/{model}/fold/{f}")),
        None => seeds::sub_seed(seed, &format!("layer1/{model}/full")),
    }
}

/// Out-of-fold meta-features for a fixed fold assignment: row `i` holds the
/// concatenated class distributions of models trained without fold
/// `assignment[i]`.
pub fn out_of_fold_features(
    x: &FeatureMatrix,
    y: &[usize],
    n_classes: usize,
    layer1: &[ClassifierSpec],
    assignment: &[usize],
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    check_training_data(x, y, n_classes)?;
    let folds = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let width = layer1.len() * n_classes;
    let mut meta = vec![vec![0.0; width]; y.len()];

    let jobs: Vec<(usize, usize)> = (0..folds)
        .flat_map(|f| (0..layer1.len()).map(move |m| (f, m)))
        .collect();
    let fitted = jobs
        .par_iter()
        .map(|&(fold, model)| {
            let train: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] != fold).collect();
            if train.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "fold {fold} leaves no training rows"
                )));
            }
            let xt = x.select(&train);
            let yt: Vec<usize> = train.iter().map(|&i| y[i]).collect();
            let clf = layer1[model].fit(&xt, &yt, n_classes, spec_seed(seed, model, Some(fold)))?;
            Ok((fold, model, clf))
        })
        .collect::<Result<Vec<_>>>()?;

    for (fold, model, clf) in &fitted {
        for i in (0..y.len()).filter(|&i| assignment[i] == *fold) {
            let p = clf.predict_proba(x.row(i));
            meta[i][model * n_classes..(model + 1) * n_classes].copy_from_slice(&p);
        }
    }
    Ok(meta)
}

impl StackingModel {
    pub fn fit(
        x: &FeatureMatrix,
        y: &[usize],
        n_classes: usize,
        config: &StackingConfig,
    ) -> Result<Self> {
        check_training_data(x, y, n_classes)?;
        if config.folds < 2 {
            return Err(Error::InvalidConfig(
                "stacking needs at least 2 folds".into(),
            ));
        }
        if config.layer1.is_empty() {
            return Err(Error::InvalidConfig(
                "stacking needs a layer-1 model".into(),
            ));
        }

        // Fewer folds put more of each rare class into every training part.
        let mut chosen = None;
        for folds in (2..=config.folds.min(y.len())).rev() {
            let assignment = stratified_folds(y, n_classes, folds, config.seed);
            if folds_cover_classes(y, n_classes, &assignment, folds) {
                chosen = Some(assignment);
                break;
            }
            log::warn!("{folds}-fold stratification leaves a class out of some fold; retrying");
        }
        let assignment = chosen.ok_or_else(|| {
            Error::InvalidConfig(
                "a class has a single example, so some fold's training part lacks it".into(),
            )
        })?;

        let meta_x =
            out_of_fold_features(x, y, n_classes, &config.layer1, &assignment, config.seed)?;
        let meta = LogisticModel::fit(&meta_x, y, n_classes, &config.meta)?;
        let layer1 = config
            .layer1
            .par_iter()
            .enumerate()
            .map(|(m, spec)| spec.fit(x, y, n_classes, spec_seed(config.seed, m, None)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_classes,
            layer1,
            meta,
        })
    }

    pub fn meta_features(&self, row: &[(usize, f64)]) -> Vec<f64> {
        self.layer1
            .iter()
            .flat_map(|m| m.predict_proba(row))
            .collect()
    }

    pub fn predict_proba(&self, row: &[(usize, f64)]) -> Vec<f64> {
        self.meta.predict_proba(&self.meta_features(row))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_stratified_and_balanced() {
        let y: Vec<usize> = (0..20).map(|i| usize::from(i >= 12)).collect();
        let a = stratified_folds(&y, 2, 4, 3);
        for f in 0..4 {
            let members: Vec<usize> = (0..20).filter(|&i| a[i] == f).collect();
            assert_eq!(members.len(), 5);
            assert!(members.iter().any(|&i| y[i] == 0));
            assert!(members.iter().any(|&i| y[i] == 1));
        }
        assert!(folds_cover_classes(&y, 2, &a, 4));
    }

    #[test]
    fn singleton_class_cannot_be_covered() {
        let y = vec![0, 0, 0, 0, 1];
        let a = stratified_folds(&y, 2, 2, 0);
        assert!(!folds_cover_classes(&y, 2, &a, 2));
    }
}
