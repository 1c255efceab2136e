//! One function per pipeline stage, reading and writing files only. The
//! command line and [`crate::pipeline`] both go through these, so every
//! stage can be rerun by hand with the same inputs the pipeline used.

use std::path::Path;

use log::info;
use topicdistill_core::lda::InferenceSettings;
use topicdistill_core::mlp::Variant;
use topicdistill_core::probe::{probe_report, ProbeSettings};
use topicdistill_core::text::{Dataset, Thresholds};

use crate::bench::{benchmark_speed, SpeedReport};
use crate::config::{ExperimentConfig, LdaSettings, NetSettings};
use crate::error::AppResult;
use crate::io::{
    format_edges, format_probe, join_by_id, load_dataset, read_bundle, read_lda, read_mlp, read_theta,
    read_vocabulary, write_bundle, write_file, write_lda, write_mlp, write_theta, Split, SplitSpec,
};
use crate::sweep::{self, format_loss_history, EvalReport};

pub fn prepare(input: &Path, split: &SplitSpec, thresholds: Thresholds, out: &Path) -> AppResult<Dataset> {
    let dataset = load_dataset(input, split, thresholds)?;
    write_bundle(out, &dataset)?;
    info!(
        "prepared V={} train={} test={} classes={}",
        dataset.dim(),
        dataset.train.len(),
        dataset.test.len(),
        dataset.labels.len()
    );
    Ok(dataset)
}

pub fn train_lda(data: &Path, k: usize, settings: &LdaSettings, out: &Path) -> AppResult<()> {
    let dataset = read_bundle(data)?;
    let fit = sweep::train_lda(&dataset, k, settings)?;
    write_lda(out, &fit.model)
}

pub fn infer_lda(model: &Path, data: &Path, split: Split, settings: InferenceSettings, out: &Path) -> AppResult<()> {
    let model = read_lda(model)?;
    let dataset = read_bundle(data)?;
    write_theta(out, &sweep::lda_thetas(&model, split.docs(&dataset), settings)?)
}

/// Trains a student on the training split joined with `theta` by document
/// id. `validation_theta`, when given, is joined with the test split and
/// its loss recorded per epoch.
pub fn distill(
    data: &Path,
    theta: &Path,
    validation_theta: Option<&Path>,
    variant: Variant,
    settings: &NetSettings,
    out: &Path,
    loss_out: Option<&Path>,
) -> AppResult<()> {
    let dataset = read_bundle(data)?;
    let train = join_by_id(&dataset.train, &read_theta(theta)?)?;
    let validation = match validation_theta {
        Some(p) => join_by_id(&dataset.test, &read_theta(p)?)?,
        None => Vec::new(),
    };
    let (model, history) = sweep::distill(&train, &validation, variant, dataset.dim(), settings)?;
    write_mlp(out, &model)?;
    if let Some(p) = loss_out {
        write_file(p, format_loss_history(&history))?;
    }
    Ok(())
}

pub fn infer_dnn(model: &Path, data: &Path, split: Split, out: &Path) -> AppResult<()> {
    let model = read_mlp(model)?;
    let dataset = read_bundle(data)?;
    write_theta(out, &sweep::dnn_thetas(&model, split.docs(&dataset))?)
}

pub fn probe(
    model: &Path,
    vocab: &Path,
    top: usize,
    settings: ProbeSettings,
    out: &Path,
    edges_out: Option<&Path>,
) -> AppResult<()> {
    let model = read_mlp(model)?;
    let vocab = read_vocabulary(vocab, 1)?;
    let report = probe_report(&model, &vocab, top, settings)?;
    write_file(out, format_probe(&report))?;
    if let Some(p) = edges_out {
        write_file(p, format_edges(&report))?;
    }
    Ok(())
}

/// Trains and evaluates every topic count from scratch and writes the
/// report files into `out`.
pub fn evaluate(data: &Path, topic_counts: &[usize], config: &ExperimentConfig, out: &Path) -> AppResult<EvalReport> {
    let dataset = read_bundle(data)?;
    let report = sweep::run_sweep(&dataset, topic_counts, config)?;
    sweep::write_report(out, &report)?;
    Ok(report)
}

pub fn benchmark(
    lda: &Path,
    dnn: &Path,
    data: &Path,
    split: Split,
    repetitions: usize,
    settings: InferenceSettings,
) -> AppResult<SpeedReport> {
    let lda = read_lda(lda)?;
    let dnn = read_mlp(dnn)?;
    let dataset = read_bundle(data)?;
    let docs: Vec<_> = split.docs(&dataset).iter().map(|d| d.tf.clone()).collect();
    benchmark_speed(&lda, &dnn, &docs, repetitions, settings)
}
