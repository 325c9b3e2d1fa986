//! Generalization-level prediction for PII spans.
//!
//! Two model families share one data model:
//!
//! * a feature-based path ([`feature_model`]) that classifies the span text,
//!   its semantic type and its number of generalizations with decision trees,
//!   random forests, gradient boosting and a stacked ensemble;
//! * a context-aware path ([`contextual`], [`encoder`], [`context_model`]) that
//!   splices every candidate into the original sentence, embeds the results
//!   and scores each candidate by the mean squared distance between
//!   elementwise-affine transforms of the two sentence embeddings.
//!
//! [`eval`] computes majority-vote and all-selections accuracy, per-level
//! precision/recall/F1, weighted averages and confusion matrices.

pub mod context_model;
pub mod contextual;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod feature_model;
pub mod seeds;
pub mod synthetic;
pub mod text;

pub use context_model::{
    ContextModelConfig, Prediction, TrainingLog, TransformParams, ValidationMode,
};
pub use contextual::{build_contextual_example, ContextualExample, DEFAULT_PAD_TOKEN};
pub use corpus::{
    compute_stats, filter_by_max_candidates, load_dataset, DatasetStats, PiiRecord, SemanticType,
    SemanticTypeSet, Split,
};
pub use encoder::{
    EmbeddingStore, EmbeddingVector, EncodedExample, HashedEncoder, SentenceEncoder,
};
pub use error::{Error, Result};
pub use eval::{evaluate, EvalResult, WeightingMode};
