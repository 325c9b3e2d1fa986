//! `genlevel`: train, evaluate and apply generalization-level models.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{EncoderKind, FeatureKind, ModelKind, RunConfig, ValidationKind};

#[derive(Parser)]
#[command(
    name = "genlevel",
    version,
    about = "Predict how far to generalize PII spans"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "GENLEVEL_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record counts, candidate-count histogram and coverage per C.
    Stats {
        #[arg(long, alias = "train")]
        data: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "3,4,5,6,7")]
        c_values: Vec<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Write the padded, spliced inputs of every record as JSON Lines.
    DumpContextual {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "c", default_value_t = 7)]
        max_candidates: usize,
        #[arg(long, default_value = genlevel_core::DEFAULT_PAD_TOKEN)]
        pad: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the context-aware model.
    TrainContext(RunArgs),
    /// Train a feature-based model or a baseline.
    TrainFeatures(RunArgs),
    /// Evaluate a trained model directory on a test split.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Embedding store covering the test records.
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print each record's chosen candidate and generalized text.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate every configured model at each C.
    SweepC(RunArgs),
    /// Write a synthetic dataset whose labels depend on sentence context.
    Synth {
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Labels fully determined by the context cue.
        #[arg(long)]
        separable: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Shared by the training commands; every flag overrides the config file.
#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Output directory (replaced if it exists).
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Maximum number of candidates C.
    #[arg(long = "c")]
    max_candidates: Option<usize>,
    #[arg(long)]
    encoder: Option<EncoderKind>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long)]
    test_store: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    logit_sign: Option<f64>,
    /// Early-stopping patience; 0 disables.
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    validation: Option<ValidationKind>,
    #[arg(long)]
    features_model: Option<FeatureKind>,
    #[arg(long)]
    n_trees: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    /// Values of C for sweep-c, comma separated.
    #[arg(long, value_delimiter = ',')]
    c_values: Option<Vec<usize>>,
    /// Models for sweep-c: baseline, features, context.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
}

impl RunArgs {
    fn resolve(&self, model: ModelKind) -> Result<RunConfig> {
        let mut c = RunConfig::load_or_default(self.config.as_deref())?;
        c.model = model;
        macro_rules! set {
            ($flag:expr => $field:expr) => {
                if let Some(v) = $flag.clone() {
                    $field = v;
                }
            };
        }
        set!(self.seed => c.seed);
        set!(self.max_candidates => c.max_candidates);
        set!(self.encoder => c.encoder.kind);
        set!(self.dim => c.encoder.dim);
        set!(self.epochs => c.context.max_epochs);
        set!(self.batch_size => c.context.batch_size);
        set!(self.weight_decay => c.context.weight_decay);
        set!(self.logit_sign => c.context.logit_sign);
        set!(self.patience => c.context.patience);
        set!(self.validation => c.context.validation);
        set!(self.features_model => c.features.model);
        set!(self.n_trees => c.features.n_trees);
        set!(self.folds => c.features.folds);
        set!(self.c_values => c.sweep.c_values);
        set!(self.models => c.sweep.models);
        if self.train.is_some() {
            c.data.train = self.train.clone();
        }
        if self.test.is_some() {
            c.data.test = self.test.clone();
        }
        if self.store.is_some() {
            c.encoder.store = self.store.clone();
            c.encoder.kind = EncoderKind::Store;
        }
        if self.test_store.is_some() {
            c.encoder.test_store = self.test_store.clone();
        }
        if self.lr.is_some() {
            c.context.learning_rate = self.lr;
        }
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Stats {
            data,
            c_values,
            json,
        } => commands::stats(&data, &c_values, json),
        Command::DumpContextual {
            data,
            max_candidates,
            pad,
            out,
        } => commands::dump_contextual(&data, max_candidates, &pad, out.as_deref()),
        Command::TrainContext(args) => {
            commands::train_context(&args.resolve(ModelKind::Context)?, &args.out)
        }
        Command::TrainFeatures(args) => {
            commands::train_features(&args.resolve(ModelKind::Features)?, &args.out)
        }
        Command::Evaluate {
            model,
            test,
            store,
            out,
        } => commands::evaluate_command(&model, &test, store.as_deref(), &out),
        Command::Predict {
            model,
            data,
            store,
            out,
        } => commands::predict_command(&model, &data, store.as_deref(), out.as_deref()),
        Command::SweepC(args) => commands::sweep_c(&args.resolve(ModelKind::Context)?, &args.out),
        Command::Synth {
            n,
            seed,
            separable,
            out,
        } => commands::synth(n, seed, separable, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
