use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use genlevel_core::context_model::{self, predict_encoded, Checkpoint};
use genlevel_core::corpus::{filter_by_max_candidates, load_dataset_with_types, write_dataset};
use genlevel_core::encoder::encode_records;
use genlevel_core::eval::report::{
    render_confusion_csv, render_sweep_table, render_text, render_weighted_sweep, SweepMetric,
    SweepRow,
};
use genlevel_core::feature_model::{Baseline, FeatureModel};
use genlevel_core::synthetic::{self, SyntheticConfig};
use genlevel_core::{
    build_contextual_example, compute_stats, evaluate, seeds, EmbeddingStore, EvalResult,
    HashedEncoder, PiiRecord, SemanticTypeSet, SentenceEncoder, Split, TransformParams,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::Artifacts;
use crate::config::{EncoderKind, ModelKind, RunConfig};

pub const CONFIG_FILE: &str = "config.toml";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const FEATURE_MODEL_FILE: &str = "model.json";

/// Loaded records plus the type set they were coded against.
fn load(path: &Path, split: Split, types: &mut SemanticTypeSet) -> Result<Vec<PiiRecord>> {
    load_dataset_with_types(path, split, types)
        .with_context(|| format!("loading {}", path.display()))
}

/// Keep records with at most `c` candidates, saying how many were dropped.
fn restrict(records: Vec<PiiRecord>, c: usize, what: &str) -> Vec<PiiRecord> {
    let kept = filter_by_max_candidates(&records, c);
    if kept.len() < records.len() {
        log::info!(
            "{what}: {} of {} records have more than {c} candidates and are excluded",
            records.len() - kept.len(),
            records.len()
        );
    }
    kept
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn stats(data: &Path, c_values: &[usize], json: bool) -> Result<()> {
    let mut types = SemanticTypeSet::default();
    let records = load(data, Split::Train, &mut types)?;
    let stats = compute_stats(&records, c_values);
    let mut out = output(None)?;
    if json {
        serde_json::to_writer_pretty(&mut out, &stats)?;
        writeln!(out)?;
    } else {
        writeln!(out, "records: {}", stats.record_count)?;
        writeln!(out, "candidates per record:")?;
        for (m, n) in &stats.histogram_num_candidates {
            writeln!(out, "  {m:>3}: {n}")?;
        }
        writeln!(out, "majority level:")?;
        for (l, n) in &stats.histogram_selected_level {
            writeln!(out, "  {l:>3}: {n}")?;
        }
        writeln!(out, "coverage at C:")?;
        for (c, f) in &stats.coverage_at {
            writeln!(out, "  {c:>3}: {:.2}%", 100.0 * f)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn dump_contextual(data: &Path, c: usize, pad: &str, out: Option<&Path>) -> Result<()> {
    let mut types = SemanticTypeSet::default();
    let records = restrict(load(data, Split::Train, &mut types)?, c, "dump-contextual");
    let mut w = output(out)?;
    for r in &records {
        let ex = build_contextual_example(r, c, pad)?;
        serde_json::to_writer(&mut w, &ex)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn synth(n: usize, seed: u64, separable: bool, out: &Path) -> Result<()> {
    let records = if separable {
        synthetic::separable(n, seed)
    } else {
        synthetic::generate(&SyntheticConfig {
            n_records: n,
            seed,
            ..SyntheticConfig::default()
        })
    };
    write_dataset(out, &records).with_context(|| format!("writing {}", out.display()))?;
    log::info!("wrote {} records to {}", records.len(), out.display());
    Ok(())
}

enum Encoder {
    Hashed(HashedEncoder),
    Store(EmbeddingStore),
}

impl Encoder {
    fn open(config: &RunConfig, store: Option<&Path>) -> Result<Self> {
        Ok(match config.encoder.kind {
            EncoderKind::Hashed => Encoder::Hashed(HashedEncoder::new(config.encoder.dim)),
            EncoderKind::Store => {
                let path = store
                    .or(config.encoder.store.as_deref())
                    .context("no embedding store configured")?;
                Encoder::Store(
                    EmbeddingStore::read(path)
                        .with_context(|| format!("reading {}", path.display()))?,
                )
            }
        })
    }

    fn get(&self) -> &dyn SentenceEncoder {
        match self {
            Encoder::Hashed(e) => e,
            Encoder::Store(e) => e,
        }
    }
}

/// Fitted model of either family, ready to predict.
#[allow(clippy::large_enum_variant)] // one per process
pub enum Model {
    Context {
        params: TransformParams,
        config: RunConfig,
    },
    Features(FeatureModel),
    Baseline(Baseline),
}

impl Model {
    /// Predicted level per record, in input order.
    fn predict(&self, records: &[PiiRecord], store: Option<&Path>) -> Result<Vec<usize>> {
        match self {
            Model::Context { params, config } => {
                let encoder = Encoder::open(config, store)?;
                let cfg = config.context_model_config(encoder.get().dim());
                let examples =
                    encode_records(records, encoder.get(), cfg.max_candidates, &cfg.pad_token)?;
                let levels = examples
                    .par_iter()
                    .map(|ex| {
                        predict_encoded(params, ex, cfg.logit_sign).map(|p| p.predicted_level)
                    })
                    .collect::<genlevel_core::Result<Vec<_>>>()?;
                Ok(levels)
            }
            Model::Features(m) => Ok(records.par_iter().map(|r| m.predict_level(r)).collect()),
            Model::Baseline(b) => Ok(b.predict(records)),
        }
    }

    fn semantic_types(&self, config: &RunConfig) -> SemanticTypeSet {
        match self {
            Model::Features(m) => m.semantic_types.clone(),
            _ => config.semantic_type_set(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct BaselineFile {
    baseline: Baseline,
}

/// Reload a model written by `train-context` or `train-features`.
fn load_model(dir: &Path) -> Result<(RunConfig, Model)> {
    let config = RunConfig::load(&dir.join(CONFIG_FILE))?;
    let model = match config.model {
        ModelKind::Context => {
            let path = dir.join(CHECKPOINT_FILE);
            let ckpt =
                Checkpoint::load(&path).with_context(|| format!("loading {}", path.display()))?;
            if ckpt.max_candidates != config.max_candidates {
                bail!(
                    "checkpoint C = {} disagrees with config max_candidates = {}",
                    ckpt.max_candidates,
                    config.max_candidates
                );
            }
            let mut config = config.clone();
            config.context.logit_sign = ckpt.logit_sign;
            Model::Context {
                params: ckpt.params()?,
                config,
            }
        }
        ModelKind::Features => {
            let path = dir.join(FEATURE_MODEL_FILE);
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            if config.classifier_spec().is_none() {
                Model::Baseline(serde_json::from_str::<BaselineFile>(&text)?.baseline)
            } else {
                Model::Features(serde_json::from_str(&text)?)
            }
        }
    };
    Ok((config, model))
}

fn write_eval(artifacts: &Artifacts, title: &str, result: &EvalResult) -> Result<()> {
    artifacts.write_json("metrics.json", result)?;
    artifacts.write("report.txt", render_text(title, result))?;
    artifacts.write("confusion.csv", render_confusion_csv(result))?;
    Ok(())
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    id: &'a str,
    predicted_level: usize,
    candidate: &'a str,
    generalized_text: String,
}

fn prediction_rows(records: &[PiiRecord], levels: &[usize]) -> Result<String> {
    let mut out = String::new();
    for (r, &level) in records.iter().zip(levels) {
        let candidate = r
            .candidate(level)
            .context("prediction outside the candidate list")?;
        let row = PredictionRow {
            id: &r.id,
            predicted_level: level,
            candidate,
            generalized_text: r.splice(candidate),
        };
        out.push_str(&serde_json::to_string(&row)?);
        out.push('\n');
    }
    Ok(out)
}

/// Evaluate on the test split when there is one, else on the training split.
fn evaluate_split(
    artifacts: &Artifacts,
    model: &Model,
    config: &RunConfig,
    train: &[PiiRecord],
    types: &mut SemanticTypeSet,
) -> Result<()> {
    let (title, records) = match &config.data.test {
        Some(path) => {
            let test = restrict(
                load(path, Split::Test, types)?,
                config.max_candidates,
                "test",
            );
            ("test", test)
        }
        None => ("train", train.to_vec()),
    };
    if records.is_empty() {
        bail!("no {title} records left to evaluate");
    }
    let store = if title == "test" {
        config.encoder.test_store.as_deref()
    } else {
        None
    };
    let levels = model.predict(&records, store)?;
    let result = evaluate(&levels, &records)?;
    write_eval(artifacts, &format!("{title} split"), &result)?;
    artifacts.write("predictions.jsonl", prediction_rows(&records, &levels)?)?;
    Ok(())
}

pub fn train_context(config: &RunConfig, out: &Path) -> Result<()> {
    config.validate()?;
    let artifacts = Artifacts::create(out)?;
    let mut types = config.semantic_type_set();
    let train = restrict(
        load(config.train_path()?, Split::Train, &mut types)?,
        config.max_candidates,
        "train",
    );
    let encoder = Encoder::open(config, None)?;
    let cfg = config.context_model_config(encoder.get().dim());
    let (params, log) = context_model::train(&train, encoder.get(), &cfg)?;
    log::info!(
        "best epoch {} with validation accuracy {:.4}",
        log.best_epoch,
        log.best_validation_accuracy
    );

    artifacts.write(CONFIG_FILE, config.to_toml()?)?;
    Checkpoint::new(&params, cfg.max_candidates, cfg.logit_sign)
        .save(artifacts.path(CHECKPOINT_FILE))?;
    artifacts.write_json("training_log.json", &log)?;
    let model = Model::Context {
        params,
        config: config.clone(),
    };
    evaluate_split(&artifacts, &model, config, &train, &mut types)?;
    artifacts.commit()?;
    Ok(())
}

pub fn train_features(config: &RunConfig, out: &Path) -> Result<()> {
    config.validate()?;
    let artifacts = Artifacts::create(out)?;
    let mut types = config.semantic_type_set();
    let train = restrict(
        load(config.train_path()?, Split::Train, &mut types)?,
        config.max_candidates,
        "train",
    );
    let model = fit_features(config, &train, &types)?;
    artifacts.write(CONFIG_FILE, config.to_toml()?)?;
    match &model {
        Model::Features(m) => m.save(artifacts.path(FEATURE_MODEL_FILE))?,
        Model::Baseline(b) => {
            artifacts.write_json(FEATURE_MODEL_FILE, &BaselineFile { baseline: *b })?
        }
        Model::Context { .. } => unreachable!(),
    }
    let mut types = model.semantic_types(config);
    evaluate_split(&artifacts, &model, config, &train, &mut types)?;
    artifacts.commit()?;
    Ok(())
}

fn fit_features(config: &RunConfig, train: &[PiiRecord], types: &SemanticTypeSet) -> Result<Model> {
    if train.is_empty() {
        bail!("no training records");
    }
    Ok(match config.classifier_spec() {
        None => Model::Baseline(Baseline::fit(train, config.features.baseline)),
        Some(spec) => Model::Features(FeatureModel::train(
            train,
            types,
            &spec,
            seeds::sub_seed(config.seed, "features"),
        )?),
    })
}

pub fn evaluate_command(
    model_dir: &Path,
    test: &Path,
    store: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let (mut config, model) = load_model(model_dir)?;
    let artifacts = Artifacts::create(out)?;
    let mut types = model.semantic_types(&config);
    let records = restrict(
        load(test, Split::Test, &mut types)?,
        config.max_candidates,
        "test",
    );
    if records.is_empty() {
        bail!("no test records to evaluate");
    }
    let levels = model.predict(&records, store)?;
    let result = evaluate(&levels, &records)?;
    config.data.test = Some(test.to_owned());
    if let Some(s) = store {
        config.encoder.test_store = Some(s.to_owned());
    }
    artifacts.write(CONFIG_FILE, config.to_toml()?)?;
    write_eval(&artifacts, "test split", &result)?;
    artifacts.write("predictions.jsonl", prediction_rows(&records, &levels)?)?;
    artifacts.commit()?;
    Ok(())
}

pub fn predict_command(
    model_dir: &Path,
    data: &Path,
    store: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let (config, model) = load_model(model_dir)?;
    let mut types = model.semantic_types(&config);
    let records = load(data, Split::Test, &mut types)?;
    if let Some(r) = records
        .iter()
        .find(|r| r.num_candidates() > config.max_candidates)
    {
        bail!(
            "record {} has {} candidates but the model was trained with C = {}",
            r.id,
            r.num_candidates(),
            config.max_candidates
        );
    }
    let levels = model.predict(&records, store)?;
    let rows = prediction_rows(&records, &levels)?;
    let mut w = output(out)?;
    w.write_all(rows.as_bytes())?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SweepReport<'a> {
    c_values: &'a [usize],
    rows: &'a [SweepRow],
}

pub fn sweep_c(config: &RunConfig, out: &Path) -> Result<()> {
    config.validate()?;
    let test_path = config
        .data
        .test
        .as_deref()
        .context("sweep-c needs a test split: pass --test or set data.test")?;
    let artifacts = Artifacts::create(out)?;
    let mut types = config.semantic_type_set();
    let train_all = load(config.train_path()?, Split::Train, &mut types)?;
    let test_all = load(test_path, Split::Test, &mut types)?;

    let mut rows = Vec::new();
    for &c in &config.sweep.c_values {
        let mut cfg = config.clone();
        cfg.max_candidates = c;
        let train = filter_by_max_candidates(&train_all, c);
        let test = filter_by_max_candidates(&test_all, c);
        if train.is_empty() || test.is_empty() {
            bail!("no records with at most {c} candidates");
        }
        let mut results = Vec::new();
        for name in &config.sweep.models {
            let model = match name.as_str() {
                "baseline" => Model::Baseline(Baseline::fit(&train, cfg.features.baseline)),
                "features" => fit_features(&cfg, &train, &types)?,
                _ => {
                    let encoder = Encoder::open(&cfg, None)?;
                    let ccfg = cfg.context_model_config(encoder.get().dim());
                    let (params, _) = context_model::train(&train, encoder.get(), &ccfg)?;
                    Model::Context {
                        params,
                        config: cfg.clone(),
                    }
                }
            };
            let levels = model.predict(&test, cfg.encoder.test_store.as_deref())?;
            results.push((name.clone(), evaluate(&levels, &test)?));
        }
        log::info!(
            "C = {c}: {} train / {} test records",
            train.len(),
            test.len()
        );
        rows.push(SweepRow {
            max_candidates: c,
            dataset_fraction: test.len() as f64 / test_all.len() as f64,
            results,
        });
    }

    let mut report = String::new();
    report.push_str("Majority vote accuracy\n\n");
    report.push_str(&render_sweep_table(&rows, SweepMetric::MajorityVote));
    report.push_str("\nAll selections accuracy\n\n");
    report.push_str(&render_sweep_table(&rows, SweepMetric::AllSelections));
    for name in &config.sweep.models {
        report.push_str(&format!("\nWeighted scores: {name}\n\n"));
        report.push_str(&render_weighted_sweep(&rows, name));
    }
    artifacts.write(CONFIG_FILE, config.to_toml()?)?;
    artifacts.write("report.txt", report)?;
    artifacts.write_json(
        "metrics.json",
        &SweepReport {
            c_values: &config.sweep.c_values,
            rows: &rows,
        },
    )?;
    artifacts.commit()?;
    Ok(())
}
