use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use genlevel_core::context_model::{forward, loss_and_grad};
use genlevel_core::encoder::{encode_records, hashed_embed};
use genlevel_core::synthetic::{generate, SyntheticConfig};
use genlevel_core::{HashedEncoder, TransformParams, DEFAULT_PAD_TOKEN};
use std::hint::black_box;

const SENTENCE: &str = "The person (born August 22, 1935) is a Canadian lawyer and former Senator.";

fn embedding(c: &mut Criterion) {
    let mut g = c.benchmark_group("hashed_embed");
    for dim in [256, 768] {
        g.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, &dim| {
            b.iter(|| hashed_embed(black_box(SENTENCE), dim, 3))
        });
    }
    g.finish();
}

fn scoring(c: &mut Criterion) {
    let records = generate(&SyntheticConfig {
        n_records: 64,
        ..SyntheticConfig::default()
    });
    let encoder = HashedEncoder::default();
    let examples = encode_records(&records, &encoder, 7, DEFAULT_PAD_TOKEN).unwrap();
    let params = TransformParams::identity(encoder.dim);
    let ex = &examples[0];

    c.bench_function("forward/c7_d768", |b| {
        b.iter(|| forward(&params, &ex.original, &ex.generalized, &ex.mask, -1.0).unwrap())
    });
    let mut g = c.benchmark_group("loss_and_grad");
    for batch in [2, 32] {
        g.bench_with_input(BenchmarkId::from_parameter(batch), &batch, |b, &n| {
            b.iter(|| loss_and_grad(&params, black_box(&examples[..n]), -1.0).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, embedding, scoring);
criterion_main!(benches);
