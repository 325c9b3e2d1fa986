#![allow(dead_code)]

use std::collections::BTreeSet;

use genlevel_core::{EmbeddingVector, EncodedExample, PiiRecord, SemanticType, TransformParams};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-scale..scale)).collect()
}

pub fn random_params(rng: &mut ChaCha8Rng, dim: usize) -> TransformParams {
    TransformParams {
        w0: (0..dim).map(|_| rng.gen_range(0.5..1.5)).collect(),
        b0: random_vec(rng, dim, 0.2),
        w1: (0..dim).map(|_| rng.gen_range(0.5..1.5)).collect(),
        b1: random_vec(rng, dim, 0.2),
    }
}

/// Random example with `m` real slots out of `c`; the target is a real slot.
pub fn random_example(rng: &mut ChaCha8Rng, dim: usize, c: usize, m: usize) -> EncodedExample {
    let target_level = rng.gen_range(1..=m);
    EncodedExample {
        record_id: "rand".into(),
        original: EmbeddingVector::new(random_vec(rng, dim, 1.0)),
        generalized: (0..c)
            .map(|_| EmbeddingVector::new(random_vec(rng, dim, 1.0)))
            .collect(),
        mask: (0..c).map(|i| i < m).collect(),
        target_level,
        all_levels: BTreeSet::from([target_level]),
    }
}

pub fn record(id: &str, majority: usize, all: &[usize], m: usize) -> PiiRecord {
    let mut all_levels: BTreeSet<usize> = all.iter().copied().collect();
    all_levels.insert(majority);
    PiiRecord {
        id: id.to_owned(),
        text: "x".into(),
        span_start: 0,
        span_end: 1,
        span_text: "x".into(),
        semantic_type: SemanticType {
            label: "MISC".into(),
            code: 3,
        },
        candidates: (1..=m).map(|i| format!("g{i}")).collect(),
        majority_level: majority,
        all_levels,
    }
}

/// 50 records over levels 1..=4 with a fixed, hand-checkable pattern: the
/// true level cycles 1,2,3,4,1,...; the prediction is right on even indices
/// and one level off (wrapping) on odd ones; every fifth record also has a
/// second annotator who picked the predicted level.
pub fn toy_set() -> (Vec<PiiRecord>, Vec<usize>) {
    let mut records = Vec::new();
    let mut preds = Vec::new();
    for i in 0..50 {
        let truth = i % 4 + 1;
        let pred = if i % 2 == 0 { truth } else { truth % 4 + 1 };
        let extra: Vec<usize> = if i % 5 == 0 { vec![pred] } else { vec![] };
        records.push(record(&format!("toy{i:02}"), truth, &extra, 4));
        preds.push(pred);
    }
    (records, preds)
}

/// Independent recount of every metric, straight from the definitions.
pub struct BruteForce {
    pub majority: f64,
    pub all_selections: f64,
    /// (precision, recall, f1, support) per level 1..=levels.
    pub per_level: Vec<(f64, f64, f64, usize)>,
    pub literal: (f64, f64, f64),
    pub support: (f64, f64, f64),
    pub counts: Vec<Vec<usize>>,
    pub rates: Vec<Vec<f64>>,
}

pub fn brute_force(records: &[PiiRecord], preds: &[usize], levels: usize) -> BruteForce {
    let n = records.len();
    let mut majority = 0usize;
    let mut all = 0usize;
    for (r, &p) in records.iter().zip(preds) {
        if p == r.majority_level {
            majority += 1;
        }
        if r.all_levels.iter().any(|&l| l == p) {
            all += 1;
        }
    }
    let mut per_level = Vec::new();
    for level in 1..=levels {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fn_ = 0usize;
        for (r, &p) in records.iter().zip(preds) {
            match (p == level, r.majority_level == level) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        let precision = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fn_ == 0 {
            0.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_level.push((precision, recall, f1, tp + fn_));
    }
    let mut literal = (0.0, 0.0, 0.0);
    let mut support = (0.0, 0.0, 0.0);
    for &(p, r, f, s) in &per_level {
        if s == 0 {
            continue;
        }
        literal.0 += p / s as f64;
        literal.1 += r / s as f64;
        literal.2 += f / s as f64;
        support.0 += p * s as f64 / n as f64;
        support.1 += r * s as f64 / n as f64;
        support.2 += f * s as f64 / n as f64;
    }
    let mut counts = vec![vec![0usize; levels]; levels];
    for (r, &p) in records.iter().zip(preds) {
        counts[r.majority_level - 1][p - 1] += 1;
    }
    let rates = counts
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
    BruteForce {
        majority: majority as f64 / n as f64,
        all_selections: all as f64 / n as f64,
        per_level,
        literal,
        support,
        counts,
        rates,
    }
}

/// Straightforward re-implementation of the hashed sentence embedding.
pub fn reference_hashed_embed(text: &str, dim: usize, ngram: usize) -> Vec<f64> {
    fn fnv1a(bytes: &[u8]) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
    let lower = text.to_lowercase();
    let tokens: Vec<&str> = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .collect();
    let mut v = vec![0.0; dim];
    let mut add = |feature: &str| {
        let h = fnv1a(feature.as_bytes());
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        v[(h % dim as u64) as usize] += sign;
    };
    for t in &tokens {
        add(t);
        let chars: Vec<char> = t.chars().collect();
        if chars.len() >= ngram {
            for w in chars.windows(ngram) {
                add(&w.iter().collect::<String>());
            }
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}
