//! The full experiment: prepare, then per topic count train the teacher,
//! infer mixtures, distill both students, infer with them and probe them,
//! then evaluate everything and write `manifest.json`.
//!
//! A stage is skipped when all of its outputs exist, unless forced, so an
//! interrupted run resumes where it stopped.
//!
//! Output layout under the configured directory:
//!
//! ```text
//! data/                      prepared bundle
//! k10/lda.json               teacher
//! k10/theta_{train,test}.tsv teacher mixtures
//! k10/dnn_{2l,3l}.json       students
//! k10/loss_{2l,3l}.tsv       per-epoch losses
//! k10/theta_dnn_{2l,3l}.tsv  student mixtures on the test split
//! k10/probe_{2l,3l}.tsv      neuron profiles; edges_3l.tsv for the deep net
//! report/                    report.csv and one TSV per measurement
//! manifest.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use topicdistill_core::mlp::Variant;
use topicdistill_core::probe::ProbeSettings;

use crate::config::ExperimentConfig;
use crate::error::{AppError, AppResult};
use crate::io::{read_bundle, read_lda, read_mlp, write_file, Split, SplitSpec};
use crate::stages;
use crate::sweep::{self, EvalReport, TrainedModels, VARIANTS};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PROBE_TOP: usize = 10;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub force: bool,
    /// Worker threads used outside timing; recorded in the manifest.
    pub threads: usize,
}

/// File locations of a pipeline run.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn data(&self) -> PathBuf {
        self.root.join("data")
    }

    pub fn topic_dir(&self, k: usize) -> PathBuf {
        self.root.join(format!("k{k}"))
    }

    pub fn lda(&self, k: usize) -> PathBuf {
        self.topic_dir(k).join("lda.json")
    }

    pub fn theta(&self, k: usize, split: Split) -> PathBuf {
        self.topic_dir(k).join(format!("theta_{}.tsv", split.name()))
    }

    pub fn dnn(&self, k: usize, v: Variant) -> PathBuf {
        self.topic_dir(k).join(format!("dnn_{}.json", v.tag()))
    }

    pub fn loss(&self, k: usize, v: Variant) -> PathBuf {
        self.topic_dir(k).join(format!("loss_{}.tsv", v.tag()))
    }

    pub fn theta_dnn(&self, k: usize, v: Variant) -> PathBuf {
        self.topic_dir(k).join(format!("theta_dnn_{}.tsv", v.tag()))
    }

    pub fn probe(&self, k: usize, v: Variant) -> PathBuf {
        self.topic_dir(k).join(format!("probe_{}.tsv", v.tag()))
    }

    pub fn edges(&self, k: usize) -> PathBuf {
        self.topic_dir(k).join("edges_3l.tsv")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join(MANIFEST_FILE)
    }
}

fn stage(name: &str, outputs: &[PathBuf], force: bool, run: impl FnOnce() -> AppResult<()>) -> AppResult<()> {
    if !force && outputs.iter().all(|p| p.is_file()) {
        info!("{name}: outputs present, skipping");
        return Ok(());
    }
    info!("{name}: running");
    run().map_err(|e| e.in_stage(name))
}

/// Runs every stage in dependency order and returns the manifest.
pub fn run_pipeline(config: &ExperimentConfig, options: RunOptions) -> AppResult<Value> {
    let layout = Layout::new(&config.output);
    let force = options.force;
    let data = layout.data();
    let bundle_files: Vec<PathBuf> = ["vocab.txt", "train.tf", "test.tf", "train.ids", "test.ids", "meta.json"]
        .iter()
        .map(|f| data.join(f))
        .collect();
    stage("prepare", &bundle_files, force, || {
        stages::prepare(&config.corpus, &SplitSpec::default(), config.thresholds.into(), &data).map(|_| ())
    })?;

    let inference = config.lda.inference();
    for &k in &config.topic_counts {
        let lda = layout.lda(k);
        stage(&format!("train-lda K={k}"), &[lda.clone()], force, || {
            stages::train_lda(&data, k, &config.lda, &lda)
        })?;
        let (theta_train, theta_test) = (layout.theta(k, Split::Train), layout.theta(k, Split::Test));
        stage(&format!("infer-lda K={k}"), &[theta_train.clone(), theta_test.clone()], force, || {
            stages::infer_lda(&lda, &data, Split::Train, inference, &theta_train)?;
            stages::infer_lda(&lda, &data, Split::Test, inference, &theta_test)
        })?;
        for v in VARIANTS {
            let (dnn, loss) = (layout.dnn(k, v), layout.loss(k, v));
            stage(&format!("distill {} K={k}", v.tag()), &[dnn.clone(), loss.clone()], force, || {
                let net = config.distill.for_variant(v);
                stages::distill(&data, &theta_train, Some(&theta_test), v, net, &dnn, Some(&loss))
            })?;
            let theta_dnn = layout.theta_dnn(k, v);
            stage(&format!("infer-dnn {} K={k}", v.tag()), &[theta_dnn.clone()], force, || {
                stages::infer_dnn(&dnn, &data, Split::Test, &theta_dnn)
            })?;
            let probe = layout.probe(k, v);
            let edges = (v == Variant::ThreeLayer).then(|| layout.edges(k));
            let outputs: Vec<PathBuf> = std::iter::once(probe.clone()).chain(edges.clone()).collect();
            stage(&format!("probe {} K={k}", v.tag()), &outputs, force, || {
                let vocab = data.join("vocab.txt");
                stages::probe(&dnn, &vocab, PROBE_TOP, ProbeSettings::default(), &probe, edges.as_deref())
            })?;
        }
    }

    let report_dir = layout.report();
    let report_files: Vec<PathBuf> =
        [sweep::REPORT_FILE, sweep::ACCURACY_FILE, sweep::KL_FILE, sweep::SPEED_FILE]
            .iter()
            .map(|f| report_dir.join(f))
            .collect();
    stage("evaluate", &report_files, force, || {
        let report = evaluate_saved(config, &layout)?;
        sweep::write_report(&report_dir, &report)
    })?;

    let manifest = build_manifest(config, &layout, options)?;
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    let path = layout.manifest();
    if fs::read_to_string(&path).ok().as_deref() != Some(text.as_str()) {
        write_file(&path, text)?;
    }
    Ok(manifest)
}

// Evaluates the models the earlier stages left on disk.
fn evaluate_saved(config: &ExperimentConfig, layout: &Layout) -> AppResult<EvalReport> {
    let dataset = read_bundle(&layout.data())?;
    let rows = config
        .topic_counts
        .iter()
        .map(|&k| {
            let models = TrainedModels {
                lda: read_lda(&layout.lda(k))?,
                dnn2l: read_mlp(&layout.dnn(k, Variant::TwoLayer))?,
                dnn3l: read_mlp(&layout.dnn(k, Variant::ThreeLayer))?,
            };
            sweep::evaluate_k(&dataset, &models, config)
        })
        .collect::<AppResult<Vec<_>>>()?;
    Ok(EvalReport { rows, repetitions: config.eval.repetitions, timing_threads: 1 })
}

pub fn sha256_file(path: &Path) -> AppResult<String> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> AppResult<()> {
    for entry in fs::read_dir(dir).map_err(|e| AppError::io(dir, e))? {
        let path = entry.map_err(|e| AppError::io(dir, e))?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// Files whose contents depend on wall-clock measurements.
pub fn is_timing_file(relative: &str) -> bool {
    relative == format!("report/{}", sweep::REPORT_FILE) || relative == format!("report/{}", sweep::SPEED_FILE)
}

fn build_manifest(config: &ExperimentConfig, layout: &Layout, options: RunOptions) -> AppResult<Value> {
    let mut paths = Vec::new();
    collect_files(&layout.root, &mut paths)?;
    let mut files = BTreeMap::new();
    let mut timing_files = BTreeMap::new();
    for p in paths {
        let rel = p.strip_prefix(&layout.root).expect("walked under root");
        let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        if rel == MANIFEST_FILE || rel.ends_with(".partial") {
            continue;
        }
        let hash = sha256_file(&p)?;
        if is_timing_file(&rel) {
            timing_files.insert(rel, hash);
        } else {
            files.insert(rel, hash);
        }
    }
    let mut echoed = config.clone();
    echoed.corpus = config.corpus.file_name().map(PathBuf::from).unwrap_or_default();
    let mut echoed = serde_json::to_value(&echoed).expect("config serializes");
    echoed.as_object_mut().expect("config is an object").remove("output");
    Ok(json!({
        "version": crate::io::FORMAT_VERSION,
        "corpus": { "file": echoed["corpus"].clone(), "sha256": sha256_file(&config.corpus)? },
        "seeds": {
            "lda": config.lda.seed,
            "distill_2l": config.distill.two_layer.seed,
            "distill_3l": config.distill.three_layer.seed,
            "classifier": config.eval.classifier.seed,
        },
        "thresholds": {
            "min_doc_len": config.thresholds.min_doc_len,
            "min_word_freq": config.thresholds.min_word_freq,
        },
        "config": echoed,
        "files": files,
        "timing": {
            "threads": options.threads,
            "timing_threads": 1,
            "repetitions": config.eval.repetitions,
            "files": timing_files,
        },
    }))
}

/// The manifest with its `timing` section removed, for comparing runs.
pub fn without_timing(manifest: &Value) -> Value {
    let mut m = manifest.clone();
    if let Some(obj) = m.as_object_mut() {
        obj.remove("timing");
    }
    m
}
