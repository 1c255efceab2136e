//! Wall-clock comparison of teacher inference against a student forward
//! pass over the same documents.
//!
//! Both paths run on the calling thread and consume the same sparse TF
//! vectors, so neither pays a densification cost the other skips. One
//! untimed warm-up pass precedes the timed repetitions.

use std::hint::black_box;
use std::time::Instant;

use topicdistill_core::lda::{infer, InferenceSettings, LdaModel};
use topicdistill_core::mlp::{forward, MlpModel};
use topicdistill_core::{Error, TfVector};

use crate::error::AppResult;

/// Speed-ups reported for the original desk-scale experiments, printed as
/// context next to measured ratios.
pub const REFERENCE_BAND: (f64, f64) = (10.0, 200.0);

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedReport {
    pub docs: usize,
    pub repetitions: usize,
    /// Total seconds per repetition.
    pub lda_seconds: Vec<f64>,
    pub dnn_seconds: Vec<f64>,
    /// Teacher time over student time, per repetition.
    pub ratios: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation of `ratios`; 0 for one repetition.
    pub sd: f64,
}

impl SpeedReport {
    pub fn relative_sd(&self) -> f64 {
        self.sd / self.mean
    }

    pub fn summary(&self) -> String {
        format!(
            "ratio {:.2} ± {:.2} (rsd {:.1}%) over {} docs × {} reps; lda {:.4}s, dnn {:.6}s per rep; reference band {}-{}x",
            self.mean,
            self.sd,
            100.0 * self.relative_sd(),
            self.docs,
            self.repetitions,
            mean(&self.lda_seconds),
            mean(&self.dnn_seconds),
            REFERENCE_BAND.0,
            REFERENCE_BAND.1,
        )
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn time_lda(model: &LdaModel, docs: &[TfVector], settings: InferenceSettings) -> AppResult<f64> {
    let start = Instant::now();
    for d in docs {
        black_box(infer(model, black_box(d), settings)?);
    }
    Ok(start.elapsed().as_secs_f64())
}

fn time_dnn(model: &MlpModel, docs: &[TfVector]) -> AppResult<f64> {
    let start = Instant::now();
    for d in docs {
        black_box(forward(model, black_box(d))?);
    }
    Ok(start.elapsed().as_secs_f64())
}

/// Times `repetitions` passes of each path over `docs` with the given
/// teacher inference settings.
pub fn benchmark_speed(
    lda: &LdaModel,
    dnn: &MlpModel,
    docs: &[TfVector],
    repetitions: usize,
    settings: InferenceSettings,
) -> AppResult<SpeedReport> {
    let arch = dnn.architecture();
    if arch.input_dim != lda.vocab_size() {
        return Err(Error::DimensionMismatch { expected: lda.vocab_size(), found: arch.input_dim }.into());
    }
    if arch.output_dim != lda.num_topics() {
        return Err(Error::DimensionMismatch { expected: lda.num_topics(), found: arch.output_dim }.into());
    }
    if repetitions == 0 || docs.is_empty() {
        return Err(Error::InvalidArgument("benchmark needs documents and at least one repetition".into()).into());
    }
    time_lda(lda, docs, settings)?;
    time_dnn(dnn, docs)?;
    let mut lda_seconds = Vec::with_capacity(repetitions);
    let mut dnn_seconds = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        lda_seconds.push(time_lda(lda, docs, settings)?);
        // clock resolution floor keeps the ratio finite on tiny inputs
        dnn_seconds.push(time_dnn(dnn, docs)?.max(1e-9));
    }
    let ratios: Vec<f64> = lda_seconds.iter().zip(&dnn_seconds).map(|(l, d)| l / d).collect();
    let m = mean(&ratios);
    let sd = if ratios.len() > 1 {
        (ratios.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / (ratios.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(SpeedReport { docs: docs.len(), repetitions, lda_seconds, dnn_seconds, ratios, mean: m, sd })
}
