//! Context-aware candidate scorer.
//!
//! For an original sentence embedding `h(x)` and candidate-sentence
//! embeddings `h(x'_i)`:
//!
//! ```text
//! a    = W0 ⊙ h(x)    + b0
//! g_i  = W1 ⊙ h(x'_i) + b1
//! s_i  = (1/V) Σ_v (g_i,v − a_v)²
//! z_i  = sign · s_i          (real candidates)
//! z_i  = −∞                  (padded slots)
//! p    = softmax(z)
//! ```
//!
//! Training minimises the cross entropy of the annotated majority level with
//! AdamW; gradients are derived by hand (see [`loss_and_grad`]).

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contextual::{build_contextual_example, DEFAULT_PAD_TOKEN};
use crate::corpus::PiiRecord;
use crate::encoder::{encode_records, EmbeddingVector, EncodedExample, SentenceEncoder};
use crate::error::{Error, Result};
use crate::seeds;

/// Elementwise affine parameters for the original and candidate sentences.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformParams {
    pub w0: Vec<f64>,
    pub b0: Vec<f64>,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
}

impl TransformParams {
    /// `W = 1`, `b = 0`: the untrained model ranks by plain embedding MSE.
    pub fn identity(dim: usize) -> Self {
        Self {
            w0: vec![1.0; dim],
            b0: vec![0.0; dim],
            w1: vec![1.0; dim],
            b1: vec![0.0; dim],
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            w0: vec![0.0; dim],
            b0: vec![0.0; dim],
            w1: vec![0.0; dim],
            b1: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.w0.len()
    }

    fn check_shape(&self) -> Result<()> {
        let dim = self.dim();
        for len in [self.b0.len(), self.w1.len(), self.b1.len()] {
            if len != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: len,
                });
            }
        }
        if !self
            .tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
        {
            return Err(Error::NonFinite("transform parameters"));
        }
        Ok(())
    }

    pub fn tensors(&self) -> [&Vec<f64>; 4] {
        [&self.w0, &self.b0, &self.w1, &self.b1]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w0, &mut self.b0, &mut self.w1, &mut self.b1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationMode {
    /// Seeded hold-out of the given fraction of the training records.
    Holdout { fraction: f64 },
    /// Select the epoch count by leave-one-out accuracy, then refit on all
    /// records. Quadratic in the record count.
    LeaveOneOut,
    /// Monitor accuracy on the training records themselves.
    TrainingSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContextModelConfig {
    pub max_candidates: usize,
    pub dim: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// +1 or −1; multiplies the MSE score to form the logit.
    pub logit_sign: f64,
    /// Epochs without improvement before stopping; `None` disables.
    pub early_stop_patience: Option<usize>,
    pub validation: ValidationMode,
    pub pad_token: String,
    pub seed: u64,
}

impl Default for ContextModelConfig {
    fn default() -> Self {
        Self {
            max_candidates: 7,
            dim: crate::encoder::DEFAULT_DIM,
            batch_size: 2,
            max_epochs: 20,
            learning_rate: 1e-6,
            weight_decay: 1e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            logit_sign: -1.0,
            early_stop_patience: Some(3),
            validation: ValidationMode::Holdout { fraction: 0.1 },
            pad_token: DEFAULT_PAD_TOKEN.to_owned(),
            seed: 0,
        }
    }
}

impl ContextModelConfig {
    /// Learning rate suited to the hashed encoder's sparse unit vectors.
    pub const HASHED_LEARNING_RATE: f64 = 1e-2;

    pub fn for_hashed_encoder() -> Self {
        Self {
            learning_rate: Self::HASHED_LEARNING_RATE,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_candidates == 0 {
            return Err(Error::InvalidConfig("max_candidates must be ≥ 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be ≥ 1".into()));
        }
        if self.logit_sign != 1.0 && self.logit_sign != -1.0 {
            return Err(Error::InvalidConfig(format!(
                "logit_sign must be +1 or -1, got {}",
                self.logit_sign
            )));
        }
        if let ValidationMode::Holdout { fraction } = self.validation {
            if !(0.0..1.0).contains(&fraction) {
                return Err(Error::InvalidConfig(format!(
                    "holdout fraction {fraction} outside [0, 1)"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// MSE score per slot; padded slots report 0.
    pub scores: Vec<f64>,
    /// `sign · score` for real slots, `-inf` for padded ones.
    pub masked_logits: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// 1-based.
    pub predicted_level: usize,
}

fn check_inputs(
    params: &TransformParams,
    h_x: &EmbeddingVector,
    h_xp: &[EmbeddingVector],
    mask: &[bool],
) -> Result<()> {
    let dim = params.dim();
    if h_xp.len() != mask.len() {
        return Err(Error::DimensionMismatch {
            expected: mask.len(),
            found: h_xp.len(),
        });
    }
    for h in std::iter::once(h_x).chain(h_xp) {
        if h.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: h.dim(),
            });
        }
        if !h.is_finite() {
            return Err(Error::NonFinite("embedding"));
        }
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }
    Ok(())
}

fn transform(w: &[f64], b: &[f64], h: &[f64]) -> Vec<f64> {
    w.iter()
        .zip(b)
        .zip(h)
        .map(|((w, b), h)| w * h + b)
        .collect()
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// Softmax over real slots; padded slots get probability exactly 0.
pub fn masked_softmax(logits: &[f64], mask: &[bool]) -> Vec<f64> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(z, _)| *z)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits
        .iter()
        .zip(mask)
        .map(|(z, &m)| if m { (z - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the largest value among real slots; ties go to the lowest index.
pub fn masked_argmax(values: &[f64], mask: &[bool]) -> usize {
    let mut best: Option<usize> = None;
    for (i, (&v, &m)) in values.iter().zip(mask).enumerate() {
        if m && best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best.expect("mask has a real slot")
}

pub fn forward(
    params: &TransformParams,
    h_x: &EmbeddingVector,
    h_xp: &[EmbeddingVector],
    mask: &[bool],
    logit_sign: f64,
) -> Result<Prediction> {
    check_inputs(params, h_x, h_xp, mask)?;
    let anchor = transform(&params.w0, &params.b0, h_x.as_slice());
    let mut scores = Vec::with_capacity(mask.len());
    let mut masked_logits = Vec::with_capacity(mask.len());
    for (h, &real) in h_xp.iter().zip(mask) {
        if real {
            let g = transform(&params.w1, &params.b1, h.as_slice());
            let s = mse(&g, &anchor);
            scores.push(s);
            masked_logits.push(logit_sign * s);
        } else {
            scores.push(0.0);
            masked_logits.push(f64::NEG_INFINITY);
        }
    }
    let probabilities = masked_softmax(&masked_logits, mask);
    let predicted_level = masked_argmax(&probabilities, mask) + 1;
    Ok(Prediction {
        scores,
        masked_logits,
        probabilities,
        predicted_level,
    })
}

pub fn predict_encoded(
    params: &TransformParams,
    example: &EncodedExample,
    logit_sign: f64,
) -> Result<Prediction> {
    forward(
        params,
        &example.original,
        &example.generalized,
        &example.mask,
        logit_sign,
    )
}

/// Cross entropy of one example; adds `scale ·` its gradient into `grads`.
fn accumulate_example(
    params: &TransformParams,
    ex: &EncodedExample,
    logit_sign: f64,
    scale: f64,
    grads: &mut TransformParams,
) -> Result<f64> {
    check_inputs(params, &ex.original, &ex.generalized, &ex.mask)?;
    let target = ex.target_level;
    if target == 0 || target > ex.mask.len() || !ex.mask[target - 1] {
        return Err(Error::PaddedTarget { level: target });
    }
    let dim = params.dim();
    let h_x = ex.original.as_slice();
    let anchor = transform(&params.w0, &params.b0, h_x);

    let mut diffs: Vec<Option<Vec<f64>>> = Vec::with_capacity(ex.mask.len());
    let mut logits = Vec::with_capacity(ex.mask.len());
    for (h, &real) in ex.generalized.iter().zip(&ex.mask) {
        if real {
            let g = transform(&params.w1, &params.b1, h.as_slice());
            let d: Vec<f64> = g.iter().zip(&anchor).map(|(g, a)| g - a).collect();
            let s = d.iter().map(|x| x * x).sum::<f64>() / dim as f64;
            logits.push(logit_sign * s);
            diffs.push(Some(d));
        } else {
            logits.push(f64::NEG_INFINITY);
            diffs.push(None);
        }
    }
    let probs = masked_softmax(&logits, &ex.mask);
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = max
        + logits
            .iter()
            .filter(|z| z.is_finite())
            .map(|z| (z - max).exp())
            .sum::<f64>()
            .ln();
    let loss = log_sum - logits[target - 1];

    // dL/dz_i = p_i − 1[i = t];  dz_i/ds_i = sign;  ds_i/dg_i = 2 (g_i − a) / V
    let mut grad_anchor = vec![0.0; dim];
    for (i, diff) in diffs.iter().enumerate() {
        let Some(diff) = diff else { continue };
        let indicator = if i + 1 == target { 1.0 } else { 0.0 };
        let coeff = scale * logit_sign * (probs[i] - indicator) * 2.0 / dim as f64;
        let h = ex.generalized[i].as_slice();
        for v in 0..dim {
            let d = coeff * diff[v];
            grads.w1[v] += d * h[v];
            grads.b1[v] += d;
            grad_anchor[v] -= d;
        }
    }
    for v in 0..dim {
        grads.w0[v] += grad_anchor[v] * h_x[v];
        grads.b0[v] += grad_anchor[v];
    }
    Ok(loss)
}

/// Mean cross entropy over `batch` and its exact gradient.
pub fn loss_and_grad(
    params: &TransformParams,
    batch: &[EncodedExample],
    logit_sign: f64,
) -> Result<(f64, TransformParams)> {
    params.check_shape()?;
    let mut grads = TransformParams::zeros(params.dim());
    if batch.is_empty() {
        return Ok((0.0, grads));
    }
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for ex in batch {
        loss += accumulate_example(params, ex, logit_sign, scale, &mut grads)?;
    }
    Ok((loss * scale, grads))
}

/// AdamW with decoupled weight decay applied to every parameter.
#[derive(Debug, Clone)]
pub struct AdamW {
    first: TransformParams,
    second: TransformParams,
    step: u32,
}

impl AdamW {
    pub fn new(dim: usize) -> Self {
        Self {
            first: TransformParams::zeros(dim),
            second: TransformParams::zeros(dim),
            step: 0,
        }
    }

    pub fn step(
        &mut self,
        params: &mut TransformParams,
        grads: &TransformParams,
        config: &ContextModelConfig,
    ) {
        self.step += 1;
        let lr = config.learning_rate;
        let (b1, b2) = (config.adam_beta1, config.adam_beta2);
        let correction1 = 1.0 - b1.powi(self.step as i32);
        let correction2 = 1.0 - b2.powi(self.step as i32);
        let decay = 1.0 - lr * config.weight_decay;
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.first.tensors_mut())
            .zip(self.second.tensors_mut())
        {
            for j in 0..p.len() {
                p[j] *= decay;
                m[j] = b1 * m[j] + (1.0 - b1) * g[j];
                v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
                let m_hat = m[j] / correction1;
                let v_hat = v[j] / correction2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + config.adam_eps);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    /// Not tracked under leave-one-out selection.
    pub train_accuracy: Option<f64>,
    pub validation_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub train_size: usize,
    pub validation_size: usize,
    /// Epoch 0 is the initialization.
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_validation_accuracy: f64,
    pub stopped_early: bool,
}

/// Fraction of examples whose predicted level equals the target level.
pub fn majority_accuracy(
    params: &TransformParams,
    examples: &[EncodedExample],
    logit_sign: f64,
) -> Result<f64> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let hits = examples
        .par_iter()
        .map(|ex| {
            predict_encoded(params, ex, logit_sign).map(|p| p.predicted_level == ex.target_level)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / examples.len() as f64)
}

/// One pass over `order`, in batches. Returns the mean batch loss.
fn run_epoch(
    params: &mut TransformParams,
    optimizer: &mut AdamW,
    examples: &[EncodedExample],
    order: &[usize],
    config: &ContextModelConfig,
) -> Result<f64> {
    let mut total = 0.0;
    let mut batches = 0usize;
    let mut batch = Vec::with_capacity(config.batch_size);
    for chunk in order.chunks(config.batch_size) {
        batch.clear();
        batch.extend(chunk.iter().map(|&i| examples[i].clone()));
        let (loss, grads) = loss_and_grad(params, &batch, config.logit_sign)?;
        optimizer.step(params, &grads, config);
        total += loss;
        batches += 1;
    }
    Ok(if batches == 0 {
        0.0
    } else {
        total / batches as f64
    })
}

/// Embed `records` with `encoder` and train.
pub fn train(
    records: &[PiiRecord],
    encoder: &dyn SentenceEncoder,
    config: &ContextModelConfig,
) -> Result<(TransformParams, TrainingLog)> {
    if records.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let examples = encode_records(records, encoder, config.max_candidates, &config.pad_token)?;
    train_encoded(&examples, config)
}

/// Train on pre-encoded examples, returning the best-validation parameters.
pub fn train_encoded(
    examples: &[EncodedExample],
    config: &ContextModelConfig,
) -> Result<(TransformParams, TrainingLog)> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let dim = examples[0].original.dim();
    if dim != config.dim {
        return Err(Error::DimensionMismatch {
            expected: config.dim,
            found: dim,
        });
    }
    match config.validation {
        ValidationMode::LeaveOneOut if examples.len() >= 2 => train_leave_one_out(examples, config),
        ValidationMode::Holdout { fraction } if fraction > 0.0 && examples.len() >= 2 => {
            let mut idx: Vec<usize> = (0..examples.len()).collect();
            idx.shuffle(&mut seeds::rng_for(config.seed, "holdout"));
            let n_val =
                ((examples.len() as f64 * fraction).round() as usize).clamp(1, examples.len() - 1);
            let (val_idx, train_idx) = idx.split_at(n_val);
            let mut val_idx = val_idx.to_vec();
            let mut train_idx = train_idx.to_vec();
            val_idx.sort_unstable();
            train_idx.sort_unstable();
            let train: Vec<_> = train_idx.iter().map(|&i| examples[i].clone()).collect();
            let val: Vec<_> = val_idx.iter().map(|&i| examples[i].clone()).collect();
            train_monitored(&train, Some(&val), config)
        }
        _ => train_monitored(examples, None, config),
    }
}

/// Train on `train`, early-stopping on accuracy over `val` (or `train`).
fn train_monitored(
    train: &[EncodedExample],
    val: Option<&[EncodedExample]>,
    config: &ContextModelConfig,
) -> Result<(TransformParams, TrainingLog)> {
    let monitor = val.unwrap_or(train);
    let sign = config.logit_sign;
    let mut params = TransformParams::identity(config.dim);
    let mut optimizer = AdamW::new(config.dim);
    let mut rng = seeds::rng_for(config.seed, "shuffle");
    let mut order: Vec<usize> = (0..train.len()).collect();

    let initial = majority_accuracy(&params, monitor, sign)?;
    let mut log = TrainingLog {
        train_size: train.len(),
        validation_size: val.map_or(0, <[_]>::len),
        epochs: vec![EpochLog {
            epoch: 0,
            train_loss: loss_and_grad(&params, train, sign)?.0,
            train_accuracy: Some(majority_accuracy(&params, train, sign)?),
            validation_accuracy: initial,
        }],
        best_epoch: 0,
        best_validation_accuracy: initial,
        stopped_early: false,
    };
    let mut best = params.clone();
    let mut since_best = 0;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let train_loss = run_epoch(&mut params, &mut optimizer, train, &order, config)?;
        let train_accuracy = majority_accuracy(&params, train, sign)?;
        let validation_accuracy = match val {
            Some(v) => majority_accuracy(&params, v, sign)?,
            None => train_accuracy,
        };
        log::debug!(
            "epoch {epoch}: loss {train_loss:.6} train acc {train_accuracy:.4} val acc {validation_accuracy:.4}"
        );
        log.epochs.push(EpochLog {
            epoch,
            train_loss,
            train_accuracy: Some(train_accuracy),
            validation_accuracy,
        });
        if validation_accuracy > log.best_validation_accuracy {
            log.best_validation_accuracy = validation_accuracy;
            log.best_epoch = epoch;
            best = params.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if config.early_stop_patience.is_some_and(|p| since_best >= p) {
                log.stopped_early = epoch < config.max_epochs;
                break;
            }
        }
    }
    Ok((best, log))
}

struct FoldState {
    held_out: usize,
    train: Vec<usize>,
    params: TransformParams,
    optimizer: AdamW,
    rng: rand_chacha::ChaCha8Rng,
}

/// Pick the epoch count maximising leave-one-out accuracy, then refit on
/// every example for that many epochs.
fn train_leave_one_out(
    examples: &[EncodedExample],
    config: &ContextModelConfig,
) -> Result<(TransformParams, TrainingLog)> {
    let n = examples.len();
    let sign = config.logit_sign;
    let mut folds: Vec<FoldState> = (0..n)
        .map(|held_out| FoldState {
            held_out,
            train: (0..n).filter(|&j| j != held_out).collect(),
            params: TransformParams::identity(config.dim),
            optimizer: AdamW::new(config.dim),
            rng: seeds::rng_for(config.seed, &format!("shuffle/loo/{held_out}")),
        })
        .collect();

    let loo_accuracy = |folds: &[FoldState]| -> Result<f64> {
        let hits = folds
            .par_iter()
            .map(|f| {
                let ex = &examples[f.held_out];
                predict_encoded(&f.params, ex, sign).map(|p| p.predicted_level == ex.target_level)
            })
            .collect::<Result<Vec<bool>>>()?;
        Ok(hits.iter().filter(|&&h| h).count() as f64 / n as f64)
    };

    let initial = loo_accuracy(&folds)?;
    let identity = TransformParams::identity(config.dim);
    let mut log = TrainingLog {
        train_size: n,
        validation_size: n,
        epochs: vec![EpochLog {
            epoch: 0,
            train_loss: loss_and_grad(&identity, examples, sign)?.0,
            train_accuracy: Some(majority_accuracy(&identity, examples, sign)?),
            validation_accuracy: initial,
        }],
        best_epoch: 0,
        best_validation_accuracy: initial,
        stopped_early: false,
    };
    let mut since_best = 0;
    for epoch in 1..=config.max_epochs {
        let losses = folds
            .par_iter_mut()
            .map(|f| {
                let mut order: Vec<usize> = f.train.clone();
                order.shuffle(&mut f.rng);
                run_epoch(&mut f.params, &mut f.optimizer, examples, &order, config)
            })
            .collect::<Result<Vec<f64>>>()?;
        let train_loss = losses.iter().sum::<f64>() / n as f64;
        let validation_accuracy = loo_accuracy(&folds)?;
        log.epochs.push(EpochLog {
            epoch,
            train_loss,
            train_accuracy: None,
            validation_accuracy,
        });
        if validation_accuracy > log.best_validation_accuracy {
            log.best_validation_accuracy = validation_accuracy;
            log.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if config.early_stop_patience.is_some_and(|p| since_best >= p) {
                log.stopped_early = epoch < config.max_epochs;
                break;
            }
        }
    }

    let mut params = TransformParams::identity(config.dim);
    let mut optimizer = AdamW::new(config.dim);
    let mut rng = seeds::rng_for(config.seed, "shuffle");
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..log.best_epoch {
        order.shuffle(&mut rng);
        run_epoch(&mut params, &mut optimizer, examples, &order, config)?;
    }
    Ok((params, log))
}

/// Build, embed and score one record.
pub fn predict(
    params: &TransformParams,
    record: &PiiRecord,
    encoder: &dyn SentenceEncoder,
    config: &ContextModelConfig,
) -> Result<Prediction> {
    let example = build_contextual_example(record, config.max_candidates, &config.pad_token)?;
    let encoded = encoder.encode(&example)?;
    predict_encoded(params, &encoded, config.logit_sign)
}

/// Serialized model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    #[serde(rename = "V")]
    pub dim: usize,
    #[serde(rename = "C")]
    pub max_candidates: usize,
    pub logit_sign: f64,
    #[serde(rename = "W0")]
    pub w0: Vec<f64>,
    pub b0: Vec<f64>,
    #[serde(rename = "W1")]
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
}

impl Checkpoint {
    pub const VERSION: u32 = 1;

    pub fn new(params: &TransformParams, max_candidates: usize, logit_sign: f64) -> Self {
        Self {
            version: Self::VERSION,
            dim: params.dim(),
            max_candidates,
            logit_sign,
            w0: params.w0.clone(),
            b0: params.b0.clone(),
            w1: params.w1.clone(),
            b1: params.b1.clone(),
        }
    }

    pub fn params(&self) -> Result<TransformParams> {
        let params = TransformParams {
            w0: self.w0.clone(),
            b0: self.b0.clone(),
            w1: self.w1.clone(),
            b1: self.b1.clone(),
        };
        params.check_shape()?;
        if params.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: params.dim(),
            });
        }
        Ok(params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Self = serde_json::from_str(&text)?;
        if ckpt.version != Self::VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported checkpoint version {}",
                ckpt.version
            )));
        }
        ckpt.params()?;
        Ok(ckpt)
    }
}
