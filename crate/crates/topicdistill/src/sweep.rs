//! Training helpers shared by the command line and the pipeline, and the
//! per-topic-count evaluation: classification accuracy over teacher,
//! student and PCA document vectors, teacher-student KL and the speed ratio.

use std::fmt::Write as _;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use topicdistill_core::eval::{accuracy, mean_kl, pca_fit, train_classifier, ClassifierConfig};
use topicdistill_core::lda::{infer, train_em, EmFit, InferenceSettings, LdaModel};
use topicdistill_core::mlp::{forward, init_mlp, train_sgd, LossHistory, MlpArchitecture, MlpModel, Variant};
use topicdistill_core::text::{Dataset, LabeledTf};
use topicdistill_core::{TfVector, TopicMixture};

use crate::bench::{benchmark_speed, SpeedReport};
use crate::config::{ExperimentConfig, LdaSettings, NetSettings};
use crate::error::AppResult;
use crate::io::write_file;

pub const VARIANTS: [Variant; 2] = [Variant::TwoLayer, Variant::ThreeLayer];

pub fn train_lda(dataset: &Dataset, k: usize, settings: &LdaSettings) -> AppResult<EmFit> {
    let config = settings.em_config(k)?;
    let fit = train_em(&dataset.train, dataset.dim(), &config)?;
    info!(
        "K={k}: EM {} after {} iterations, corpus ELBO {:.4}",
        if fit.converged { "converged" } else { "stopped" },
        fit.iterations,
        fit.elbo_history.last().copied().unwrap_or(f64::NAN)
    );
    Ok(fit)
}

/// Teacher mixtures for `docs`, in document order.
pub fn lda_thetas(
    model: &LdaModel,
    docs: &[LabeledTf],
    settings: InferenceSettings,
) -> AppResult<Vec<(String, TopicMixture)>> {
    let thetas = docs
        .par_iter()
        .map(|d| infer(model, &d.tf, settings).map(|(theta, _)| (d.id.clone(), theta)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(thetas)
}

/// Student outputs for `docs`, in document order.
pub fn dnn_thetas(model: &MlpModel, docs: &[LabeledTf]) -> AppResult<Vec<(String, TopicMixture)>> {
    let thetas = docs
        .par_iter()
        .map(|d| forward(model, &d.tf).map(|theta| (d.id.clone(), theta)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(thetas)
}

/// Trains one student against `(tf, teacher mixture)` pairs.
pub fn distill(
    train: &[(TfVector, TopicMixture)],
    validation: &[(TfVector, TopicMixture)],
    variant: Variant,
    vocab_size: usize,
    settings: &NetSettings,
) -> AppResult<(MlpModel, LossHistory)> {
    let k = train.first().map_or(0, |(_, t)| t.len());
    let arch = MlpArchitecture::new(variant, vocab_size, k)?;
    let init = init_mlp(arch, settings.seed).with_input_norm(settings.input_norm()?);
    let (model, history) = train_sgd(&init, train, &settings.train_config(), validation)?;
    info!(
        "K={k} {}: train loss {:.5} -> {:.5}",
        variant.tag(),
        history.train.first().copied().unwrap_or(f64::NAN),
        history.train.last().copied().unwrap_or(f64::NAN)
    );
    Ok((model, history))
}

pub fn format_loss_history(h: &LossHistory) -> String {
    let mut out = String::from("epoch\ttrain\tvalidation\n");
    for (e, t) in h.train.iter().enumerate() {
        let v = h.validation.get(e).map_or(String::new(), |v| format!("{v:?}"));
        writeln!(out, "{}\t{t:?}\t{v}", e + 1).unwrap();
    }
    out
}

fn pairs(docs: &[LabeledTf], thetas: &[(String, TopicMixture)]) -> Vec<(TfVector, TopicMixture)> {
    docs.iter().zip(thetas).map(|(d, (_, t))| (d.tf.clone(), t.clone())).collect()
}

#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub lda: LdaModel,
    pub dnn2l: MlpModel,
    pub dnn3l: MlpModel,
}

impl TrainedModels {
    pub fn dnn(&self, variant: Variant) -> &MlpModel {
        match variant {
            Variant::TwoLayer => &self.dnn2l,
            Variant::ThreeLayer => &self.dnn3l,
        }
    }
}

/// Teacher plus both students for one topic count, trained in memory.
pub fn train_models(dataset: &Dataset, k: usize, config: &ExperimentConfig) -> AppResult<TrainedModels> {
    let lda = train_lda(dataset, k, &config.lda)?.model;
    let inference = config.lda.inference();
    let train = pairs(&dataset.train, &lda_thetas(&lda, &dataset.train, inference)?);
    let test = pairs(&dataset.test, &lda_thetas(&lda, &dataset.test, inference)?);
    let mut nets = VARIANTS
        .iter()
        .map(|v| distill(&train, &test, *v, dataset.dim(), config.distill.for_variant(*v)).map(|(m, _)| m));
    let dnn2l = nets.next().unwrap()?;
    let dnn3l = nets.next().unwrap()?;
    Ok(TrainedModels { lda, dnn2l, dnn3l })
}

/// Measurements for one topic count.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub k: usize,
    pub acc_pca: f64,
    pub acc_lda: f64,
    pub acc_dnn2l: f64,
    pub acc_dnn3l: f64,
    pub kl_2l: f64,
    pub kl_3l: f64,
    /// Mean KL of the constant uniform predictor, for scale.
    pub kl_uniform: f64,
    pub pca_components: usize,
    pub speed_2l: SpeedReport,
    pub speed_3l: SpeedReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub repetitions: usize,
    /// Timing always runs on one thread.
    pub timing_threads: usize,
}

fn vectors(thetas: &[(String, TopicMixture)]) -> Vec<Vec<f64>> {
    thetas.iter().map(|(_, t)| t.as_slice().to_vec()).collect()
}

fn labels(docs: &[LabeledTf]) -> Vec<&str> {
    docs.iter().map(|d| d.label.as_str()).collect()
}

fn classify(train: &[Vec<f64>], test: &[Vec<f64>], dataset: &Dataset, config: &ClassifierConfig) -> AppResult<f64> {
    let clf = train_classifier(train, &labels(&dataset.train), config)?;
    Ok(accuracy(&clf, test, &labels(&dataset.test))?)
}

/// Evaluates trained models for one topic count on the dataset's test split.
pub fn evaluate_k(dataset: &Dataset, models: &TrainedModels, config: &ExperimentConfig) -> AppResult<EvalRow> {
    let k = models.lda.num_topics();
    let inference = config.lda.inference();
    let clf_config = ClassifierConfig::from(&config.eval.classifier);

    let lda_train = lda_thetas(&models.lda, &dataset.train, inference)?;
    let lda_test = lda_thetas(&models.lda, &dataset.test, inference)?;
    let acc_lda = classify(&vectors(&lda_train), &vectors(&lda_test), dataset, &clf_config)?;
    let teacher: Vec<TopicMixture> = lda_test.iter().map(|(_, t)| t.clone()).collect();
    let uniform = vec![TopicMixture::uniform(k); teacher.len()];
    let kl_uniform = mean_kl(&teacher, &uniform)?;

    let mut acc = [0.0; 2];
    let mut kl = [0.0; 2];
    for (i, v) in VARIANTS.iter().enumerate() {
        let dnn = models.dnn(*v);
        let train = dnn_thetas(dnn, &dataset.train)?;
        let test = dnn_thetas(dnn, &dataset.test)?;
        acc[i] = classify(&vectors(&train), &vectors(&test), dataset, &clf_config)?;
        let student: Vec<TopicMixture> = test.into_iter().map(|(_, t)| t).collect();
        kl[i] = mean_kl(&teacher, &student)?;
    }

    let pca = pca_fit(&dataset.train, dataset.dim(), k)?;
    if pca.n_components() < k {
        warn!("K={k}: PCA found only {} components (rank {})", pca.n_components(), pca.rank());
    }
    let pca_train: Vec<Vec<f64>> = dataset.train.iter().map(|d| pca.transform(&d.tf)).collect();
    let pca_test: Vec<Vec<f64>> = dataset.test.iter().map(|d| pca.transform(&d.tf)).collect();
    let acc_pca = classify(&pca_train, &pca_test, dataset, &clf_config)?;

    let docs: Vec<TfVector> = dataset.test.iter().map(|d| d.tf.clone()).collect();
    let reps = config.eval.repetitions;
    let speed_2l = benchmark_speed(&models.lda, &models.dnn2l, &docs, reps, inference)?;
    let speed_3l = benchmark_speed(&models.lda, &models.dnn3l, &docs, reps, inference)?;
    info!("K={k} 2l {}", speed_2l.summary());
    info!("K={k} 3l {}", speed_3l.summary());

    Ok(EvalRow {
        k,
        acc_pca,
        acc_lda,
        acc_dnn2l: acc[0],
        acc_dnn3l: acc[1],
        kl_2l: kl[0],
        kl_3l: kl[1],
        kl_uniform,
        pca_components: pca.n_components(),
        speed_2l,
        speed_3l,
    })
}

/// Trains and evaluates every topic count in turn.
pub fn run_sweep(dataset: &Dataset, topic_counts: &[usize], config: &ExperimentConfig) -> AppResult<EvalReport> {
    let rows = topic_counts
        .iter()
        .map(|&k| {
            let models = train_models(dataset, k, config)?;
            evaluate_k(dataset, &models, config)
        })
        .collect::<AppResult<Vec<_>>>()?;
    Ok(EvalReport { rows, repetitions: config.eval.repetitions, timing_threads: 1 })
}

pub const REPORT_FILE: &str = "report.csv";
pub const ACCURACY_FILE: &str = "fig1_accuracy.tsv";
pub const KL_FILE: &str = "fig2_kl.tsv";
pub const SPEED_FILE: &str = "fig3_speed.tsv";

pub fn format_report_csv(report: &EvalReport) -> String {
    let mut out =
        String::from("K,acc_pca,acc_lda,acc_dnn2l,acc_dnn3l,kl_2l,kl_3l,ratio_2l,ratio_3l,ratio_sd_2l,ratio_sd_3l\n");
    for r in &report.rows {
        writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            r.k,
            r.acc_pca,
            r.acc_lda,
            r.acc_dnn2l,
            r.acc_dnn3l,
            r.kl_2l,
            r.kl_3l,
            r.speed_2l.mean,
            r.speed_3l.mean,
            r.speed_2l.sd,
            r.speed_3l.sd
        )
        .unwrap();
    }
    out
}

/// Writes `report.csv` and one plot-ready TSV per measurement into `dir`.
pub fn write_report(dir: &Path, report: &EvalReport) -> AppResult<()> {
    write_file(&dir.join(REPORT_FILE), format_report_csv(report))?;
    let mut acc = String::from("K\tpca\tlda\tdnn2l\tdnn3l\n");
    let mut kl = String::from("K\tdnn2l\tdnn3l\tuniform\n");
    let mut speed = format!(
        "# repetitions={} threads={}\nK\tratio_2l\tsd_2l\tratio_3l\tsd_3l\n",
        report.repetitions, report.timing_threads
    );
    for r in &report.rows {
        writeln!(acc, "{}\t{:?}\t{:?}\t{:?}\t{:?}", r.k, r.acc_pca, r.acc_lda, r.acc_dnn2l, r.acc_dnn3l).unwrap();
        writeln!(kl, "{}\t{:?}\t{:?}\t{:?}", r.k, r.kl_2l, r.kl_3l, r.kl_uniform).unwrap();
        writeln!(
            speed,
            "{}\t{:?}\t{:?}\t{:?}\t{:?}",
            r.k, r.speed_2l.mean, r.speed_2l.sd, r.speed_3l.mean, r.speed_3l.sd
        )
        .unwrap();
    }
    write_file(&dir.join(ACCURACY_FILE), acc)?;
    write_file(&dir.join(KL_FILE), kl)?;
    write_file(&dir.join(SPEED_FILE), speed)
}
