//! Feature-based level classification.
//!
//! A record becomes a sparse row: unigram counts of the span text over a
//! training vocabulary, followed by the semantic-type code and the number of
//! generalizations as two dense columns. Classes are levels `1..=K` where
//! `K` is the largest majority level in the training split; predictions are
//! restricted to each record's own candidate count.

pub mod boosting;
pub mod forest;
pub mod logistic;
pub mod stacking;
pub mod tree;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{PiiRecord, SemanticTypeSet};
use crate::error::{Error, Result};
use crate::text::tokenize;

pub use boosting::{BoostConfig, BoostedModel};
pub use forest::{ForestConfig, RandomForest};
pub use logistic::{LogisticConfig, LogisticModel};
pub use stacking::{StackingConfig, StackingModel};
pub use tree::{Criterion, DecisionTree, FeatureMatrix, MaxFeatures, Node, TreeConfig, TreeParams};

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    z.iter_mut().for_each(|v| *v /= total);
}

/// Token → column map built from training spans.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Vocabulary {
    pub index: BTreeMap<String, usize>,
    pub min_count: usize,
}

impl Vocabulary {
    /// Tokens of the span texts seen at least `min_count` times, indexed in
    /// sorted order.
    pub fn build(records: &[PiiRecord], min_count: usize) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for r in records {
            for t in tokenize(&r.span_text) {
                *counts.entry(t).or_default() += 1;
            }
        }
        let index = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count)
            .map(|(t, _)| t)
            .enumerate()
            .map(|(i, t)| (t, i))
            .collect();
        Self { index, min_count }
    }

    pub fn from_tokens<I: IntoIterator<Item = S>, S: Into<String>>(tokens: I) -> Self {
        Self {
            index: tokens
                .into_iter()
                .enumerate()
                .map(|(i, t)| (t.into(), i))
                .collect(),
            min_count: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Columns of the full row: vocabulary, semantic type, candidate count.
    pub fn n_features(&self) -> usize {
        self.len() + 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector {
    /// `(column, count)` for in-vocabulary tokens, sorted by column.
    pub counts: Vec<(usize, u32)>,
    pub semtype_code: usize,
    pub num_generalizations: usize,
}

impl FeatureVector {
    pub fn dense_counts(&self, vocab_size: usize) -> Vec<u32> {
        let mut dense = vec![0; vocab_size];
        for &(i, c) in &self.counts {
            dense[i] = c;
        }
        dense
    }

    pub fn to_row(&self, vocab_size: usize) -> Vec<(usize, f64)> {
        let mut row: Vec<(usize, f64)> = self
            .counts
            .iter()
            .map(|&(i, c)| (i, f64::from(c)))
            .collect();
        row.push((vocab_size, self.semtype_code as f64));
        row.push((vocab_size + 1, self.num_generalizations as f64));
        row.retain(|&(_, v)| v != 0.0);
        row
    }
}

pub fn vectorize(record: &PiiRecord, vocab: &Vocabulary) -> FeatureVector {
    let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
    for t in tokenize(&record.span_text) {
        if let Some(&i) = vocab.index.get(&t) {
            *counts.entry(i).or_default() += 1;
        }
    }
    FeatureVector {
        counts: counts.into_iter().collect(),
        semtype_code: record.semantic_type.code,
        num_generalizations: record.num_candidates(),
    }
}

pub fn feature_matrix(records: &[PiiRecord], vocab: &Vocabulary) -> FeatureMatrix {
    FeatureMatrix::new(
        vocab.n_features(),
        records
            .iter()
            .map(|r| vectorize(r, vocab).to_row(vocab.len()))
            .collect(),
    )
}

/// Hyperparameters of one classifier family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    Tree(TreeConfig),
    Forest(ForestConfig),
    Boosted(BoostConfig),
    Stacking(StackingConfig),
}

impl ClassifierSpec {
    /// Fit with `seed` overriding any seed in the spec.
    pub fn fit(
        &self,
        x: &FeatureMatrix,
        y: &[usize],
        n_classes: usize,
        seed: u64,
    ) -> Result<Classifier> {
        Ok(match self {
            ClassifierSpec::Tree(c) => {
                let mut rng = crate::seeds::rng_for(seed, "tree");
                Classifier::Tree(DecisionTree::fit_weighted(
                    x,
                    y,
                    n_classes,
                    c,
                    None,
                    Some(&mut rng),
                )?)
            }
            ClassifierSpec::Forest(c) => Classifier::Forest(RandomForest::fit(
                x,
                y,
                n_classes,
                &ForestConfig { seed, ..*c },
            )?),
            ClassifierSpec::Boosted(c) => {
                Classifier::Boosted(BoostedModel::fit(x, y, n_classes, c)?)
            }
            ClassifierSpec::Stacking(c) => Classifier::Stacking(StackingModel::fit(
                x,
                y,
                n_classes,
                &StackingConfig { seed, ..c.clone() },
            )?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    Tree(DecisionTree),
    Forest(RandomForest),
    Boosted(BoostedModel),
    Stacking(StackingModel),
}

impl Classifier {
    pub fn n_classes(&self) -> usize {
        match self {
            Classifier::Tree(m) => m.n_classes,
            Classifier::Forest(m) => m.n_classes,
            Classifier::Boosted(m) => m.n_classes,
            Classifier::Stacking(m) => m.n_classes,
        }
    }

    /// Class distribution over levels `1..=n_classes` (index 0 = level 1).
    pub fn predict_proba(&self, row: &[(usize, f64)]) -> Vec<f64> {
        match self {
            Classifier::Tree(m) => m.predict_proba(row),
            Classifier::Forest(m) => m.predict_proba(row),
            Classifier::Boosted(m) => m.predict_proba(row),
            Classifier::Stacking(m) => m.predict_proba(row),
        }
    }
}

/// Argmax over levels `1..=m` of `proba`, renormalized to those levels.
/// Ties go to the lowest level; with no mass on any allowed level the
/// answer is level 1.
pub fn restrict_to_candidates(proba: &[f64], m: usize) -> (usize, Vec<f64>) {
    let allowed = &proba[..m.min(proba.len())];
    let total: f64 = allowed.iter().sum();
    let mut restricted: Vec<f64> = if total > 0.0 {
        allowed.iter().map(|p| p / total).collect()
    } else {
        vec![0.0; allowed.len()]
    };
    restricted.resize(m, 0.0);
    let mut best = 0;
    for (i, &p) in restricted.iter().enumerate() {
        if p > restricted[best] {
            best = i;
        }
    }
    (best + 1, restricted)
}

/// A trained feature-based model with everything needed to vectorize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureModel {
    pub vocabulary: Vocabulary,
    pub semantic_types: SemanticTypeSet,
    pub classifier: Classifier,
}

impl FeatureModel {
    pub fn train(
        records: &[PiiRecord],
        semantic_types: &SemanticTypeSet,
        spec: &ClassifierSpec,
        seed: u64,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let vocabulary = Vocabulary::build(records, 1);
        let x = feature_matrix(records, &vocabulary);
        let y: Vec<usize> = records.iter().map(|r| r.majority_level - 1).collect();
        let n_classes = records.iter().map(|r| r.majority_level).max().unwrap_or(1);
        let classifier = spec.fit(&x, &y, n_classes, seed)?;
        Ok(Self {
            vocabulary,
            semantic_types: semantic_types.clone(),
            classifier,
        })
    }

    pub fn predict_proba(&self, record: &PiiRecord) -> Vec<f64> {
        let row = vectorize(record, &self.vocabulary).to_row(self.vocabulary.len());
        self.classifier.predict_proba(&row)
    }

    pub fn predict_level(&self, record: &PiiRecord) -> usize {
        restrict_to_candidates(&self.predict_proba(record), record.num_candidates()).0
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(self)?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineStrategy {
    MostFrequentLevel,
    FirstCandidate,
}

/// Constant-level reference predictor, clipped to each record's `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Baseline {
    pub strategy: BaselineStrategy,
    pub level: usize,
}

impl Baseline {
    /// Most frequent majority level in `train` (ties → lowest level).
    pub fn fit(train: &[PiiRecord], strategy: BaselineStrategy) -> Self {
        let level = match strategy {
            BaselineStrategy::FirstCandidate => 1,
            BaselineStrategy::MostFrequentLevel => {
                let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
                for r in train {
                    *counts.entry(r.majority_level).or_default() += 1;
                }
                counts
                    .iter()
                    .fold(
                        (1, 0),
                        |(bl, bc), (&l, &c)| if c > bc { (l, c) } else { (bl, bc) },
                    )
                    .0
            }
        };
        Self { strategy, level }
    }

    pub fn predict(&self, records: &[PiiRecord]) -> Vec<usize> {
        records
            .iter()
            .map(|r| self.level.clamp(1, r.num_candidates()))
            .collect()
    }
}
