//! Run configuration: TOML file, then command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use genlevel_core::context_model::{ContextModelConfig, ValidationMode};
use genlevel_core::corpus::DEFAULT_SEMANTIC_TYPES;
use genlevel_core::feature_model::{
    BaselineStrategy, BoostConfig, ClassifierSpec, Criterion, ForestConfig, StackingConfig,
    TreeConfig, TreeParams,
};
use genlevel_core::{SemanticTypeSet, DEFAULT_PAD_TOKEN};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Context,
    Features,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Hashed,
    Store,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ValidationKind {
    Holdout,
    LeaveOneOut,
    TrainingSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Stacking,
    Forest,
    Boosted,
    Tree,
    Baseline,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    pub kind: EncoderKind,
    /// Dimension of the hashed encoder; a store carries its own.
    pub dim: usize,
    pub store: Option<PathBuf>,
    /// Store for the test split when its ids are not in `store`.
    pub test_store: Option<PathBuf>,
}

impl Default for EncoderSection {
    fn default() -> Self {
        Self {
            kind: EncoderKind::Hashed,
            dim: genlevel_core::encoder::DEFAULT_DIM,
            store: None,
            test_store: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextSection {
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Defaults to 1e-2 with the hashed encoder and 1e-6 with a store.
    pub learning_rate: Option<f64>,
    pub weight_decay: f64,
    pub logit_sign: f64,
    /// 0 disables early stopping.
    pub patience: usize,
    pub validation: ValidationKind,
    pub holdout_fraction: f64,
}

impl Default for ContextSection {
    fn default() -> Self {
        let d = ContextModelConfig::default();
        Self {
            batch_size: d.batch_size,
            max_epochs: d.max_epochs,
            learning_rate: None,
            weight_decay: d.weight_decay,
            logit_sign: d.logit_sign,
            patience: d.early_stop_patience.unwrap_or(0),
            validation: ValidationKind::Holdout,
            holdout_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesSection {
    pub model: FeatureKind,
    pub criterion: Criterion,
    pub n_trees: usize,
    /// Family default when absent.
    pub max_depth: Option<usize>,
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub folds: usize,
    pub baseline: BaselineStrategy,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        Self {
            model: FeatureKind::Stacking,
            criterion: Criterion::Gini,
            n_trees: 100,
            max_depth: None,
            n_rounds: 100,
            learning_rate: 0.1,
            folds: 5,
            baseline: BaselineStrategy::MostFrequentLevel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub c_values: Vec<usize>,
    /// Any of "baseline", "features", "context".
    pub models: Vec<String>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            c_values: vec![3, 4, 5, 6, 7],
            models: vec!["baseline".into(), "features".into(), "context".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub seed: u64,
    pub max_candidates: usize,
    pub pad_token: String,
    pub semantic_types: Vec<String>,
    pub data: DataSection,
    pub encoder: EncoderSection,
    pub context: ContextSection,
    pub features: FeaturesSection,
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Context,
            seed: 0,
            max_candidates: 7,
            pad_token: DEFAULT_PAD_TOKEN.into(),
            semantic_types: DEFAULT_SEMANTIC_TYPES
                .iter()
                .map(|s| s.to_string())
                .collect(),
            data: DataSection::default(),
            encoder: EncoderSection::default(),
            context: ContextSection::default(),
            features: FeaturesSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn semantic_type_set(&self) -> SemanticTypeSet {
        SemanticTypeSet::new(self.semantic_types.iter().cloned())
    }

    pub fn train_path(&self) -> Result<&Path> {
        match &self.data.train {
            Some(p) => Ok(p),
            None => bail!("no training data: pass --train or set data.train"),
        }
    }

    pub fn context_model_config(&self, dim: usize) -> ContextModelConfig {
        let c = &self.context;
        let default_lr = match self.encoder.kind {
            EncoderKind::Hashed => ContextModelConfig::HASHED_LEARNING_RATE,
            EncoderKind::Store => ContextModelConfig::default().learning_rate,
        };
        ContextModelConfig {
            max_candidates: self.max_candidates,
            dim,
            batch_size: c.batch_size,
            max_epochs: c.max_epochs,
            learning_rate: c.learning_rate.unwrap_or(default_lr),
            weight_decay: c.weight_decay,
            logit_sign: c.logit_sign,
            early_stop_patience: (c.patience > 0).then_some(c.patience),
            validation: match c.validation {
                ValidationKind::Holdout => ValidationMode::Holdout {
                    fraction: c.holdout_fraction,
                },
                ValidationKind::LeaveOneOut => ValidationMode::LeaveOneOut,
                ValidationKind::TrainingSet => ValidationMode::TrainingSet,
            },
            pad_token: self.pad_token.clone(),
            seed: self.seed,
            ..ContextModelConfig::default()
        }
    }

    /// Classifier for the feature path; `None` for the baseline.
    pub fn classifier_spec(&self) -> Option<ClassifierSpec> {
        let f = &self.features;
        let tree = |default_depth: usize| TreeConfig {
            criterion: f.criterion,
            params: TreeParams {
                max_depth: f.max_depth.unwrap_or(default_depth),
                ..TreeParams::default()
            },
        };
        let forest = |criterion: Criterion| {
            let d = ForestConfig::default();
            ForestConfig {
                n_trees: f.n_trees,
                tree: TreeConfig {
                    criterion,
                    params: TreeParams {
                        max_depth: f.max_depth.unwrap_or(d.tree.params.max_depth),
                        ..d.tree.params
                    },
                },
                ..d
            }
        };
        let boosted = BoostConfig {
            n_rounds: f.n_rounds,
            learning_rate: f.learning_rate,
            ..BoostConfig::default()
        };
        Some(match f.model {
            FeatureKind::Baseline => return None,
            FeatureKind::Tree => ClassifierSpec::Tree(tree(TreeParams::default().max_depth)),
            FeatureKind::Forest => ClassifierSpec::Forest(forest(f.criterion)),
            FeatureKind::Boosted => ClassifierSpec::Boosted(boosted),
            FeatureKind::Stacking => ClassifierSpec::Stacking(StackingConfig {
                layer1: vec![
                    ClassifierSpec::Forest(forest(Criterion::Gini)),
                    ClassifierSpec::Forest(forest(Criterion::Entropy)),
                    ClassifierSpec::Boosted(boosted),
                    ClassifierSpec::Tree(TreeConfig {
                        criterion: Criterion::Entropy,
                        ..tree(6)
                    }),
                ],
                folds: f.folds,
                ..StackingConfig::default()
            }),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_candidates == 0 {
            bail!("max_candidates must be at least 1");
        }
        if self.encoder.kind == EncoderKind::Store && self.encoder.store.is_none() {
            bail!("encoder.kind = \"store\" needs encoder.store (or --store)");
        }
        if self.sweep.c_values.is_empty() {
            bail!("sweep.c_values is empty");
        }
        for m in &self.sweep.models {
            if !["baseline", "features", "context"].contains(&m.as_str()) {
                bail!("unknown sweep model {m:?}; expected baseline, features or context");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        let text = c.to_toml().unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c: RunConfig =
            toml::from_str("seed = 9\n[context]\nmax_epochs = 3\n[features]\nmodel = \"forest\"\n")
                .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.context.max_epochs, 3);
        assert_eq!(c.context.batch_size, 2);
        assert!(matches!(
            c.classifier_spec(),
            Some(ClassifierSpec::Forest(_))
        ));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("sed = 1\n").is_err());
    }

    #[test]
    fn learning_rate_follows_encoder() {
        let mut c = RunConfig::default();
        assert_eq!(c.context_model_config(8).learning_rate, 1e-2);
        c.encoder.kind = EncoderKind::Store;
        assert_eq!(c.context_model_config(8).learning_rate, 1e-6);
        c.context.learning_rate = Some(0.5);
        assert_eq!(c.context_model_config(8).learning_rate, 0.5);
    }
}
