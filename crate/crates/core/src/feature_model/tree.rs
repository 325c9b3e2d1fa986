//! Greedy binary trees over sparse feature rows.
//!
//! One grower serves both classification trees (Gini or entropy impurity,
//! leaves hold class distributions) and the second-order regression trees
//! used by gradient boosting. Splits test `value <= threshold`; rows missing
//! a feature read it as 0.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse rows sorted by feature index; absent features are zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    n_features: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl FeatureMatrix {
    pub fn new(n_features: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.retain(|&(f, v)| {
                    assert!(f < n_features, "feature {f} out of range {n_features}");
                    v != 0.0
                });
                r.sort_by_key(|&(f, _)| f);
                r
            })
            .collect();
        Self { n_features, rows }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_features = rows.first().map_or(0, Vec::len);
        Self::new(
            n_features,
            rows.iter()
                .map(|r| r.iter().copied().enumerate().collect())
                .collect(),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            n_features: self.n_features,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

pub fn feature_value(row: &[(usize, f64)], feature: usize) -> f64 {
    row.binary_search_by_key(&feature, |&(f, _)| f)
        .map_or(0.0, |i| row[i].1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Gini,
    Entropy,
}

/// Gini impurity of a class-weight histogram.
pub fn gini(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - counts
        .iter()
        .map(|c| (c / total) * (c / total))
        .sum::<f64>()
}

/// Shannon entropy in bits of a class-weight histogram.
pub fn entropy(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

impl Criterion {
    pub fn impurity(self, counts: &[f64]) -> f64 {
        match self {
            Criterion::Gini => gini(counts),
            Criterion::Entropy => entropy(counts),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => ((n_features as f64).sqrt().ceil() as usize).max(1),
            MaxFeatures::Count(k) => k.clamp(1, n_features.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Minimum total row weight for a node to be split.
    pub min_samples_split: f64,
    /// Minimum total row weight on each side of a split.
    pub min_samples_leaf: f64,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 8,
            min_samples_split: 2.0,
            min_samples_leaf: 1.0,
            max_features: MaxFeatures::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn leaf_value(&self, row: &[(usize, f64)]) -> &[f64] {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if feature_value(row, *feature) <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> Vec<&[f64]> {
        match self {
            Node::Leaf { value } => vec![value],
            Node::Split { left, right, .. } => {
                let mut v = left.leaves();
                v.extend(right.leaves());
                v
            }
        }
    }
}

/// What a tree fits: node statistics, their cost and the leaf value.
pub(crate) trait Objective {
    type Stats: Clone;

    fn empty(&self) -> Self::Stats;
    fn add_row(&self, stats: &mut Self::Stats, row: usize, weight: f64);
    fn merge(&self, into: &mut Self::Stats, other: &Self::Stats);
    fn diff(&self, total: &Self::Stats, part: &Self::Stats) -> Self::Stats;
    fn weight(&self, stats: &Self::Stats) -> f64;
    /// Lower is better; the gain of a split is `cost(parent) − cost(l) − cost(r)`.
    fn cost(&self, stats: &Self::Stats) -> f64;
    fn is_pure(&self, stats: &Self::Stats) -> bool;
    fn leaf(&self, stats: &Self::Stats) -> Vec<f64>;
}

/// Class histogram with weighted-impurity cost.
pub(crate) struct Classification<'a> {
    pub labels: &'a [usize],
    pub n_classes: usize,
    pub criterion: Criterion,
}

impl Objective for Classification<'_> {
    type Stats = Vec<f64>;

    fn empty(&self) -> Vec<f64> {
        vec![0.0; self.n_classes]
    }

    fn add_row(&self, stats: &mut Vec<f64>, row: usize, weight: f64) {
        stats[self.labels[row]] += weight;
    }

    fn merge(&self, into: &mut Vec<f64>, other: &Vec<f64>) {
        into.iter_mut().zip(other).for_each(|(a, b)| *a += b);
    }

    fn diff(&self, total: &Vec<f64>, part: &Vec<f64>) -> Vec<f64> {
        total.iter().zip(part).map(|(a, b)| a - b).collect()
    }

    fn weight(&self, stats: &Vec<f64>) -> f64 {
        stats.iter().sum()
    }

    fn cost(&self, stats: &Vec<f64>) -> f64 {
        self.weight(stats) * self.criterion.impurity(stats)
    }

    fn is_pure(&self, stats: &Vec<f64>) -> bool {
        stats.iter().filter(|&&c| c > 0.0).count() <= 1
    }

    fn leaf(&self, stats: &Vec<f64>) -> Vec<f64> {
        let total = self.weight(stats);
        stats.iter().map(|c| c / total).collect()
    }
}

/// Gradient/hessian sums with the Newton-step cost `−G² / (H + λ)`.
pub(crate) struct NewtonRegression<'a> {
    pub grad: &'a [f64],
    pub hess: &'a [f64],
    pub lambda: f64,
    /// Multiplies the Newton leaf value `−G / (H + λ)`.
    pub leaf_scale: f64,
}

impl Objective for NewtonRegression<'_> {
    /// `[Σ g, Σ h, Σ weight]`
    type Stats = [f64; 3];

    fn empty(&self) -> [f64; 3] {
        [0.0; 3]
    }

    fn add_row(&self, stats: &mut [f64; 3], row: usize, weight: f64) {
        stats[0] += weight * self.grad[row];
        stats[1] += weight * self.hess[row];
        stats[2] += weight;
    }

    fn merge(&self, into: &mut [f64; 3], other: &[f64; 3]) {
        for k in 0..3 {
            into[k] += other[k];
        }
    }

    fn diff(&self, total: &[f64; 3], part: &[f64; 3]) -> [f64; 3] {
        [total[0] - part[0], total[1] - part[1], total[2] - part[2]]
    }

    fn weight(&self, stats: &[f64; 3]) -> f64 {
        stats[2]
    }

    fn cost(&self, stats: &[f64; 3]) -> f64 {
        -(stats[0] * stats[0]) / (stats[1] + self.lambda)
    }

    fn is_pure(&self, stats: &[f64; 3]) -> bool {
        stats[0] == 0.0 && stats[1] == 0.0
    }

    fn leaf(&self, stats: &[f64; 3]) -> Vec<f64> {
        vec![-self.leaf_scale * stats[0] / (stats[1] + self.lambda)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SplitCandidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn gain_tolerance(scale: f64) -> f64 {
    1e-12 * scale.abs().max(1.0)
}

/// First candidate with the largest gain; candidates arrive ordered by
/// feature then threshold, so ties resolve to the lowest of both.
fn best_of(cands: impl IntoIterator<Item = SplitCandidate>) -> Option<SplitCandidate> {
    let mut best: Option<SplitCandidate> = None;
    for c in cands {
        if best.is_none_or(|b| c.gain > b.gain + gain_tolerance(b.gain)) {
            best = Some(c);
        }
    }
    best
}

pub(crate) struct Grower<'a, O: Objective> {
    pub objective: &'a O,
    pub x: &'a FeatureMatrix,
    pub params: TreeParams,
    pub rng: Option<&'a mut ChaCha8Rng>,
}

impl<O: Objective> Grower<'_, O> {
    pub fn grow(&mut self, rows: &[(usize, f64)]) -> Node {
        self.grow_node(rows, 0)
    }

    fn stats_of(&self, rows: &[(usize, f64)]) -> O::Stats {
        let mut s = self.objective.empty();
        for &(r, w) in rows {
            self.objective.add_row(&mut s, r, w);
        }
        s
    }

    fn can_split(&self, stats: &O::Stats, depth: usize) -> bool {
        depth < self.params.max_depth
            && self.objective.weight(stats) >= self.params.min_samples_split
            && !self.objective.is_pure(stats)
    }

    fn feature_subset(&mut self) -> Option<Vec<usize>> {
        let n = self.x.n_features();
        let k = self.params.max_features.resolve(n);
        if k >= n {
            return None;
        }
        let rng = self.rng.as_mut().expect("feature subsampling needs an rng");
        let mut chosen = sample(rng, n, k).into_vec();
        chosen.sort_unstable();
        Some(chosen)
    }

    fn grow_node(&mut self, rows: &[(usize, f64)], depth: usize) -> Node {
        let stats = self.stats_of(rows);
        if !self.can_split(&stats, depth) {
            return Node::Leaf {
                value: self.objective.leaf(&stats),
            };
        }
        let features = self.feature_subset();
        let cands = self.candidates(rows, &stats, features.as_deref());
        let parent_cost = self.objective.cost(&stats);
        let mut chosen =
            best_of(cands.iter().copied()).filter(|b| b.gain > gain_tolerance(parent_cost));

        // Zero immediate gain (e.g. XOR) can still hide a useful split one
        // level down.
        if chosen.is_none() && depth + 2 <= self.params.max_depth {
            chosen = best_of(cands.iter().map(|c| {
                let (l, r) = partition(self.x, rows, c.feature, c.threshold);
                let mut total = c.gain;
                for side in [&l, &r] {
                    let s = self.stats_of(side);
                    if self.can_split(&s, depth + 1) {
                        if let Some(b) = best_of(self.candidates(side, &s, features.as_deref())) {
                            total += b.gain.max(0.0);
                        }
                    }
                }
                SplitCandidate { gain: total, ..*c }
            }))
            .filter(|b| b.gain > gain_tolerance(parent_cost));
        }

        match chosen {
            None => Node::Leaf {
                value: self.objective.leaf(&stats),
            },
            Some(split) => {
                let (l, r) = partition(self.x, rows, split.feature, split.threshold);
                Node::Split {
                    feature: split.feature,
                    threshold: split.threshold,
                    left: Box::new(self.grow_node(&l, depth + 1)),
                    right: Box::new(self.grow_node(&r, depth + 1)),
                }
            }
        }
    }

    /// Every admissible split of `rows`, ordered by feature then threshold.
    fn candidates(
        &self,
        rows: &[(usize, f64)],
        parent: &O::Stats,
        features: Option<&[usize]>,
    ) -> Vec<SplitCandidate> {
        let obj = self.objective;
        let allowed = |f: usize| features.is_none_or(|fs| fs.binary_search(&f).is_ok());
        let mut entries: Vec<(usize, f64, usize, f64)> = Vec::new();
        for &(r, w) in rows {
            for &(f, v) in self.x.row(r) {
                if allowed(f) {
                    entries.push((f, v, r, w));
                }
            }
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

        let parent_cost = obj.cost(parent);
        let min_leaf = self.params.min_samples_leaf;
        let mut out = Vec::new();
        let mut start = 0;
        while start < entries.len() {
            let feature = entries[start].0;
            let end = start + entries[start..].partition_point(|e| e.0 == feature);

            // Distinct non-zero values with their statistics, plus the zero bucket.
            let mut buckets: Vec<(f64, O::Stats)> = Vec::new();
            let mut nonzero = obj.empty();
            let mut nonzero_rows = 0usize;
            let mut i = start;
            while i < end {
                let value = entries[i].1;
                let mut s = obj.empty();
                while i < end && entries[i].1 == value {
                    obj.add_row(&mut s, entries[i].2, entries[i].3);
                    nonzero_rows += 1;
                    i += 1;
                }
                obj.merge(&mut nonzero, &s);
                buckets.push((value, s));
            }
            if nonzero_rows < rows.len() {
                let zero = obj.diff(parent, &nonzero);
                let at = buckets.partition_point(|(v, _)| *v < 0.0);
                buckets.insert(at, (0.0, zero));
            }

            let mut left = obj.empty();
            for k in 0..buckets.len().saturating_sub(1) {
                obj.merge(&mut left, &buckets[k].1);
                let right = obj.diff(parent, &left);
                if obj.weight(&left) < min_leaf || obj.weight(&right) < min_leaf {
                    continue;
                }
                let gain = parent_cost - obj.cost(&left) - obj.cost(&right);
                let (lo, hi) = (buckets[k].0, buckets[k + 1].0);
                out.push(SplitCandidate {
                    feature,
                    threshold: lo + (hi - lo) / 2.0,
                    gain,
                });
            }
            start = end;
        }
        out
    }
}

type WeightedRows = Vec<(usize, f64)>;

fn partition(
    x: &FeatureMatrix,
    rows: &[(usize, f64)],
    feature: usize,
    threshold: f64,
) -> (WeightedRows, WeightedRows) {
    rows.iter()
        .partition(|&&(r, _)| feature_value(x.row(r), feature) <= threshold)
}

/// Classification tree with class-distribution leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_classes: usize,
    pub criterion: Criterion,
    pub root: Node,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub criterion: Criterion,
    #[serde(flatten)]
    pub params: TreeParams,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            criterion: Criterion::Gini,
            params: TreeParams::default(),
        }
    }
}

pub(crate) fn check_training_data(x: &FeatureMatrix, y: &[usize], n_classes: usize) -> Result<()> {
    if y.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: y.len(),
        });
    }
    if let Some(bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::InvalidConfig(format!(
            "class {bad} outside 0..{n_classes}"
        )));
    }
    Ok(())
}

impl DecisionTree {
    /// Fit on rows with the given weights (all-ones when `weights` is `None`).
    pub fn fit_weighted(
        x: &FeatureMatrix,
        y: &[usize],
        n_classes: usize,
        config: &TreeConfig,
        weights: Option<&[f64]>,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Self> {
        check_training_data(x, y, n_classes)?;
        let rows: Vec<(usize, f64)> = match weights {
            Some(w) => w
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(|(i, &w)| (i, w))
                .collect(),
            None => (0..y.len()).map(|i| (i, 1.0)).collect(),
        };
        if rows.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let objective = Classification {
            labels: y,
            n_classes,
            criterion: config.criterion,
        };
        let mut grower = Grower {
            objective: &objective,
            x,
            params: config.params,
            rng,
        };
        Ok(Self {
            n_classes,
            criterion: config.criterion,
            root: grower.grow(&rows),
        })
    }

    pub fn fit(
        x: &FeatureMatrix,
        y: &[usize],
        n_classes: usize,
        config: &TreeConfig,
    ) -> Result<Self> {
        let mut rng = crate::seeds::rng_for(0, "tree");
        Self::fit_weighted(x, y, n_classes, config, None, Some(&mut rng))
    }

    pub fn predict_proba(&self, row: &[(usize, f64)]) -> Vec<f64> {
        self.root.leaf_value(row).to_vec()
    }
}
