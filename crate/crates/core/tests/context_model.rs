use genlevel_core::context_model::{self, predict, Checkpoint, ContextModelConfig, ValidationMode};
use genlevel_core::synthetic::separable;
use genlevel_core::{load_dataset, HashedEncoder, Split, TransformParams};

fn overfit_config(epochs: usize) -> ContextModelConfig {
    ContextModelConfig {
        max_epochs: epochs,
        early_stop_patience: None,
        validation: ValidationMode::TrainingSet,
        seed: 1,
        ..ContextModelConfig::for_hashed_encoder()
    }
}

#[test]
fn memorized_records_are_recalled() {
    let records = separable(30, 2);
    let encoder = HashedEncoder::default();
    let config = overfit_config(60);
    let (params, _) = context_model::train(&records, &encoder, &config).unwrap();
    for r in &records {
        let p = predict(&params, r, &encoder, &config).unwrap();
        assert_eq!(p.predicted_level, r.majority_level, "{}", r.id);
    }
}

#[test]
fn same_seed_same_trajectory() {
    let records = separable(20, 3);
    let encoder = HashedEncoder::new(64);
    let config = ContextModelConfig {
        dim: 64,
        ..overfit_config(8)
    };
    let a = context_model::train(&records, &encoder, &config).unwrap();
    let b = context_model::train(&records, &encoder, &config).unwrap();
    assert_eq!(a, b);
    let c = context_model::train(
        &records,
        &encoder,
        &ContextModelConfig { seed: 2, ..config },
    )
    .unwrap();
    assert_ne!(a.0, c.0);
}

#[test]
fn holdout_and_leave_one_out_run() {
    let records = separable(12, 4);
    let encoder = HashedEncoder::new(32);
    for validation in [
        ValidationMode::Holdout { fraction: 0.25 },
        ValidationMode::LeaveOneOut,
    ] {
        let config = ContextModelConfig {
            dim: 32,
            max_epochs: 4,
            validation,
            ..ContextModelConfig::for_hashed_encoder()
        };
        let (params, log) = context_model::train(&records, &encoder, &config).unwrap();
        assert_eq!(params.dim(), 32);
        assert!(log.best_epoch <= 4);
        assert!(log.epochs.len() <= 5);
        assert!((0.0..=1.0).contains(&log.best_validation_accuracy));
    }
}

#[test]
fn senator_record_never_predicts_padding() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/parity_records.jsonl");
    let records = load_dataset(path, Split::Test).unwrap();
    let senator = &records[0];
    let encoder = HashedEncoder::default();
    let config = ContextModelConfig {
        max_candidates: 5,
        ..ContextModelConfig::for_hashed_encoder()
    };
    let (params, _) = context_model::train(
        &separable(20, 5),
        &encoder,
        &ContextModelConfig {
            max_candidates: 5,
            max_epochs: 3,
            ..overfit_config(3)
        },
    )
    .unwrap();
    for p in [&params, &TransformParams::identity(config.dim)] {
        let pred = predict(p, senator, &encoder, &config).unwrap();
        assert!((1..=3).contains(&pred.predicted_level));
        assert_eq!(&pred.probabilities[3..], &[0.0, 0.0]);
        assert_eq!(&pred.scores[3..], &[0.0, 0.0]);
    }
}

#[test]
fn checkpoint_round_trips_exactly() {
    let records = separable(10, 6);
    let encoder = HashedEncoder::new(16);
    let config = ContextModelConfig {
        dim: 16,
        ..overfit_config(5)
    };
    let (params, _) = context_model::train(&records, &encoder, &config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("checkpoint.json");
    Checkpoint::new(&params, config.max_candidates, config.logit_sign)
        .save(&path)
        .unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back.params().unwrap(), params);
    assert_eq!(back.logit_sign, -1.0);
}
