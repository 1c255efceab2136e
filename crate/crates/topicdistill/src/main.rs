use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use topicdistill::config::{load_config, validate_config, ExperimentConfig, LdaSettings, NetSettings};
use topicdistill::error::{exit, AppError, AppResult};
use topicdistill::io::{Split, SplitSpec};
use topicdistill::pipeline::{run_pipeline, RunOptions};
use topicdistill::stages;
use topicdistill_core::lda::InferenceSettings;
use topicdistill_core::mlp::Variant;
use topicdistill_core::probe::{ProbeSettings, Ranking};
use topicdistill_core::text::Thresholds;

/// Distill LDA topic inference into small feed-forward networks.
#[derive(Debug, Parser)]
#[command(name = "topicdistill", version)]
struct Cli {
    /// Seed for every random component (overrides config and per-stage seeds).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for non-timing work; timing always uses one.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Rerun pipeline stages even when their outputs exist.
    #[arg(long, global = true)]
    force: bool,
    /// Only log warnings and errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Filter, vectorize and write a dataset bundle from a JSONL corpus.
    Prepare {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 100)]
        min_doc_len: usize,
        #[arg(long, default_value_t = 30)]
        min_word_freq: u32,
        #[arg(long, default_value = "train")]
        train_split: String,
        #[arg(long, default_value = "test")]
        test_split: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit an LDA teacher by variational EM.
    TrainLda {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        topics: usize,
        /// Symmetric Dirichlet prior (default 50/K).
        #[arg(long)]
        alpha: Option<f64>,
        /// `random` or `uniform`.
        #[arg(long, default_value = "random")]
        init: String,
        #[command(flatten)]
        inference: InferenceArgs,
        #[arg(long, default_value_t = 1e-4)]
        em_tol: f64,
        #[arg(long, default_value_t = 50)]
        em_max_iter: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write teacher topic mixtures for one split.
    InferLda {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
        #[command(flatten)]
        inference: InferenceArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a student network on teacher mixtures of the training split.
    Distill {
        #[arg(long)]
        data: PathBuf,
        /// Teacher mixtures of the training split.
        #[arg(long)]
        theta: PathBuf,
        /// Teacher mixtures of the test split, for validation losses.
        #[arg(long)]
        validation_theta: Option<PathBuf>,
        #[arg(long, default_value = "3l")]
        variant: Variant,
        #[command(flatten)]
        net: NetArgs,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch loss table.
        #[arg(long)]
        loss_out: Option<PathBuf>,
    },
    /// Write student topic mixtures for one split.
    InferDnn {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and evaluate every topic count, writing report.csv and figure tables.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        topics: Vec<usize>,
        /// Experiment config supplying model and evaluation settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time teacher inference against a student forward pass.
    Benchmark {
        #[arg(long)]
        lda: PathBuf,
        #[arg(long)]
        dnn: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[command(flatten)]
        inference: InferenceArgs,
    },
    /// Rank vocabulary words by hidden-neuron activation.
    Probe {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Count placed on the probed word.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Rank by absolute instead of signed activation.
        #[arg(long)]
        absolute: bool,
        #[arg(long)]
        out: PathBuf,
        /// Strongest first-to-second layer weights (three-layer models).
        #[arg(long)]
        edges_out: Option<PathBuf>,
    },
    /// Run the whole experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report every problem in a config file.
    ValidateConfig { path: PathBuf },
}

#[derive(Debug, Args)]
struct InferenceArgs {
    /// Stop when the mean absolute change of gamma drops below this.
    #[arg(long, default_value_t = 1e-5)]
    e_tol: f64,
    #[arg(long, default_value_t = 100)]
    e_max_iter: usize,
}

impl InferenceArgs {
    fn settings(&self) -> InferenceSettings {
        InferenceSettings { tol: self.e_tol, max_iter: self.e_max_iter }
    }
}

#[derive(Debug, Args)]
struct NetArgs {
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr_decay: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    no_shuffle: bool,
    /// `none` or `l1`.
    #[arg(long)]
    input_norm: Option<String>,
}

impl NetArgs {
    fn settings(&self, seed: Option<u64>) -> NetSettings {
        let d = NetSettings::default();
        NetSettings {
            learning_rate: self.lr.unwrap_or(d.learning_rate),
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch.unwrap_or(d.batch_size),
            lr_decay: self.lr_decay.unwrap_or(d.lr_decay),
            shuffle: !self.no_shuffle,
            momentum: self.momentum.unwrap_or(d.momentum),
            weight_decay: self.weight_decay.unwrap_or(d.weight_decay),
            input_norm: self.input_norm.clone().unwrap_or(d.input_norm),
            seed: seed.unwrap_or(d.seed),
        }
    }
}

fn run(cli: Cli) -> AppResult<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Prepare { input, min_doc_len, min_word_freq, train_split, test_split, out } => {
            let split = SplitSpec { train: train_split, test: test_split };
            stages::prepare(&input, &split, Thresholds { min_doc_len, min_word_freq }, &out)?;
        }
        Command::TrainLda { data, topics, alpha, init, inference, em_tol, em_max_iter, out } => {
            let settings = LdaSettings {
                alpha,
                e_tol: inference.e_tol,
                e_max_iter: inference.e_max_iter,
                em_tol,
                em_max_iter,
                init,
                seed: seed.unwrap_or(0),
                ..LdaSettings::default()
            };
            stages::train_lda(&data, topics, &settings, &out)?;
        }
        Command::InferLda { model, data, split, inference, out } => {
            stages::infer_lda(&model, &data, split, inference.settings(), &out)?;
        }
        Command::Distill { data, theta, validation_theta, variant, net, out, loss_out } => {
            let settings = net.settings(seed);
            check(settings_config(variant, &settings).check())?;
            stages::distill(&data, &theta, validation_theta.as_deref(), variant, &settings, &out, loss_out.as_deref())?;
        }
        Command::InferDnn { model, data, split, out } => {
            stages::infer_dnn(&model, &data, split, &out)?;
        }
        Command::Evaluate { data, topics, config, reps, out } => {
            let mut cfg = match config {
                Some(p) => load_config(&p)?,
                None => ExperimentConfig::default(),
            };
            cfg.topic_counts = topics.clone();
            if let Some(s) = seed {
                cfg.set_seed(s);
            }
            if let Some(r) = reps {
                cfg.eval.repetitions = r;
            }
            check(cfg.check())?;
            let report = stages::evaluate(&data, &topics, &cfg, &out)?;
            print!("{}", topicdistill::sweep::format_report_csv(&report));
        }
        Command::Benchmark { lda, dnn, data, split, reps, inference } => {
            let report = stages::benchmark(&lda, &dnn, &data, split, reps, inference.settings())?;
            println!("{}", report.summary());
        }
        Command::Probe { model, vocab, top, scale, absolute, out, edges_out } => {
            let ranking = if absolute { Ranking::Absolute } else { Ranking::Signed };
            stages::probe(&model, &vocab, top, ProbeSettings { scale, ranking }, &out, edges_out.as_deref())?;
        }
        Command::Run { config, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.set_seed(s);
            }
            if let Some(o) = out {
                cfg.output = o;
            }
            let threads = cli.threads.unwrap_or_else(rayon::current_num_threads);
            run_pipeline(&cfg, RunOptions { force: cli.force, threads })?;
            println!("{}", cfg.output.join(topicdistill::pipeline::MANIFEST_FILE).display());
        }
        Command::ValidateConfig { path } => {
            let diagnostics = validate_config(&path)?;
            for d in &diagnostics {
                println!("{d}");
            }
            if !diagnostics.is_empty() {
                let summary = format!("{} problem(s) in {}", diagnostics.len(), path.display());
                return Err(AppError::Config(vec![summary]));
            }
            println!("{}: ok", path.display());
        }
    }
    Ok(())
}

// Range-checks one network's settings through the shared config validator.
fn settings_config(variant: Variant, net: &NetSettings) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    match variant {
        Variant::TwoLayer => cfg.distill.two_layer = net.clone(),
        Variant::ThreeLayer => cfg.distill.three_layer = net.clone(),
    }
    cfg
}

fn check(diagnostics: Vec<topicdistill::config::Diagnostic>) -> AppResult<()> {
    if diagnostics.is_empty() {
        Ok(())
    } else {
        Err(AppError::Config(diagnostics.iter().map(|d| d.to_string()).collect()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::SUCCESS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            error!("cannot set up {n} threads: {e}");
            return ExitCode::from(exit::USAGE as u8);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
