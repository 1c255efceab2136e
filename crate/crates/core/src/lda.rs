//! The teacher: LDA with variational inference and variational EM.
//!
//! Per-document inference alternates the two coordinate-ascent updates
//!
//! ```text
//! phi[n][i] ∝ exp(ψ(gamma[i])) · beta[i][w_n]
//! gamma[i]  = alpha[i] + Σ_n count_n · phi[n][i]
//! ```
//!
//! starting from `gamma[i] = alpha[i] + total / K` and uniform `phi`. The
//! topic mixture reported for a document is the variational Dirichlet mean
//! `gamma / Σ gamma`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mixture::{TopicMixture, SIMPLEX_TOL};
use crate::special::{ln_gamma, log_sum_exp, psi};
use crate::text::{LabeledTf, TfVector};

/// Trained LDA parameters: a Dirichlet prior over topics and one word
/// distribution per topic, stored as log probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    alpha: Vec<f64>,
    log_beta: Matrix,
    // exp(log_beta) transposed to V×K so one word's topic column is contiguous
    beta_by_word: Matrix,
}

impl LdaModel {
    /// Validates and wraps the parameters. `log_beta` is K×V.
    pub fn new(alpha: Vec<f64>, log_beta: Matrix) -> Result<Self> {
        let k = alpha.len();
        if k < 2 {
            return Err(Error::InvalidArgument(format!("LDA needs at least 2 topics, got {k}")));
        }
        if log_beta.rows() != k {
            return Err(Error::DimensionMismatch { expected: k, found: log_beta.rows() });
        }
        if log_beta.cols() == 0 {
            return Err(Error::InvalidArgument("empty vocabulary".into()));
        }
        if let Some(a) = alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::Domain(format!("alpha entries must be positive, got {a}")));
        }
        for t in 0..k {
            let row = log_beta.row(t);
            if row.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
                return Err(Error::Domain(format!("topic {t} has invalid log probabilities")));
            }
            let sum: f64 = row.iter().map(|x| libm::exp(*x)).sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::Domain(format!("topic {t} sums to {sum}")));
            }
        }
        let beta_by_word = Matrix::from_fn(log_beta.cols(), k, |w, t| libm::exp(log_beta.get(t, w)));
        Ok(Self { alpha, log_beta, beta_by_word })
    }

    /// Builds a model from probability rows (K×V), taking logs.
    pub fn from_beta(alpha: Vec<f64>, beta: &Matrix) -> Result<Self> {
        let log_beta = Matrix::from_fn(beta.rows(), beta.cols(), |r, c| libm::log(beta.get(r, c)));
        Self::new(alpha, log_beta)
    }

    pub fn num_topics(&self) -> usize {
        self.alpha.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.log_beta.cols()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn log_beta(&self) -> &Matrix {
        &self.log_beta
    }

    /// Probability of `word` under `topic`.
    pub fn beta(&self, topic: usize, word: usize) -> f64 {
        self.beta_by_word.get(word, topic)
    }
}

/// Per-document variational parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalState {
    pub gamma: Vec<f64>,
    /// One row per distinct document word, in the TF vector's index order.
    pub phi: Matrix,
    pub iterations: usize,
    pub converged: bool,
}

impl VariationalState {
    /// The standard starting point: `gamma = alpha + total/K`, uniform `phi`.
    pub fn initial(model: &LdaModel, v: &TfVector) -> Self {
        let k = model.num_topics();
        let share = v.total() as f64 / k as f64;
        Self {
            gamma: model.alpha.iter().map(|a| a + share).collect(),
            phi: Matrix::from_fn(v.distinct(), k, |_, _| 1.0 / k as f64),
            iterations: 0,
            converged: false,
        }
    }

    /// One full update sweep: every `phi` row given the current `gamma`,
    /// then `gamma` given the new `phi`. Returns the mean absolute change
    /// in `gamma`.
    pub fn sweep(&mut self, model: &LdaModel, v: &TfVector) -> f64 {
        let k = model.num_topics();
        let psis: Vec<f64> = self.gamma.iter().map(|g| psi(*g)).collect();
        let top = psis.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scale: Vec<f64> = psis.iter().map(|p| libm::exp(p - top)).collect();
        let mut gamma = model.alpha.clone();
        for (n, &(w, count)) in v.entries().iter().enumerate() {
            let beta_w = model.beta_by_word.row(w);
            let row = self.phi.row_mut(n);
            let mut sum = 0.0;
            for i in 0..k {
                row[i] = scale[i] * beta_w[i];
                sum += row[i];
            }
            if sum > 0.0 && sum.is_finite() {
                row.iter_mut().for_each(|p| *p /= sum);
            } else {
                // every topic underflowed in linear space; normalize in log space
                for i in 0..k {
                    row[i] = psis[i] + model.log_beta.get(i, w);
                }
                let lse = log_sum_exp(row);
                row.iter_mut().for_each(|p| *p = libm::exp(*p - lse));
            }
            let c = f64::from(count);
            for i in 0..k {
                gamma[i] += c * row[i];
            }
        }
        let delta = gamma.iter().zip(&self.gamma).map(|(a, b)| (a - b).abs()).sum::<f64>() / k as f64;
        self.gamma = gamma;
        self.iterations += 1;
        delta
    }
}

/// Stopping rule for per-document inference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceSettings {
    /// Threshold on the mean absolute change of gamma.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InferenceSettings {
    fn default() -> Self {
        Self { tol: 1e-5, max_iter: 100 }
    }
}

impl InferenceSettings {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("inference tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("inference needs at least one iteration".into()));
        }
        Ok(())
    }
}

/// Runs variational inference for one document until the mean absolute
/// change of gamma drops below `settings.tol` or `settings.max_iter` sweeps
/// have run.
pub fn infer(model: &LdaModel, v: &TfVector, settings: InferenceSettings) -> Result<(TopicMixture, VariationalState)> {
    settings.validate()?;
    v.check_dim(model.vocab_size())?;
    let state = run_inference(model, v, settings);
    Ok((normalize(&state.gamma), state))
}

fn run_inference(model: &LdaModel, v: &TfVector, settings: InferenceSettings) -> VariationalState {
    let mut state = VariationalState::initial(model, v);
    while state.iterations < settings.max_iter {
        if state.sweep(model, v) < settings.tol {
            state.converged = true;
            break;
        }
    }
    state
}

fn normalize(gamma: &[f64]) -> TopicMixture {
    let sum: f64 = gamma.iter().sum();
    TopicMixture::from_vec_unchecked(gamma.iter().map(|g| g / sum).collect())
}

/// Topic mixture as the mean of Dirichlet(gamma).
pub fn estimate_theta(gamma: &[f64]) -> Result<TopicMixture> {
    if gamma.is_empty() {
        return Err(Error::InvalidArgument("empty gamma".into()));
    }
    if let Some(g) = gamma.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::Domain(format!("gamma entries must be positive, got {g}")));
    }
    Ok(normalize(gamma))
}

/// Evidence lower bound on ln p(v | alpha, beta) for the variational
/// distribution `state`.
pub fn elbo(model: &LdaModel, v: &TfVector, state: &VariationalState) -> Result<f64> {
    let k = model.num_topics();
    v.check_dim(model.vocab_size())?;
    if state.gamma.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: state.gamma.len() });
    }
    if state.phi.rows() != v.distinct() || state.phi.cols() != k {
        return Err(Error::DimensionMismatch { expected: v.distinct(), found: state.phi.rows() });
    }
    Ok(elbo_unchecked(model, v, state))
}

fn elbo_unchecked(model: &LdaModel, v: &TfVector, state: &VariationalState) -> f64 {
    let alpha = &model.alpha;
    let gamma = &state.gamma;
    let alpha_sum: f64 = alpha.iter().sum();
    let gamma_sum: f64 = gamma.iter().sum();
    let psi_sum = psi(gamma_sum);
    // E_q[ln theta_i]
    let e_log_theta: Vec<f64> = gamma.iter().map(|g| psi(*g) - psi_sum).collect();

    // E_q[ln p(theta | alpha)] - E_q[ln q(theta | gamma)]
    let mut bound = ln_gamma(alpha_sum) - ln_gamma(gamma_sum);
    for i in 0..alpha.len() {
        bound += ln_gamma(gamma[i]) - ln_gamma(alpha[i]) + (alpha[i] - gamma[i]) * e_log_theta[i];
    }
    // E_q[ln p(z | theta)] + E_q[ln p(w | z, beta)] - E_q[ln q(z | phi)]
    for (n, &(w, count)) in v.entries().iter().enumerate() {
        let c = f64::from(count);
        for (i, &p) in state.phi.row(n).iter().enumerate() {
            if p > 0.0 {
                bound += c * p * (e_log_theta[i] + model.log_beta.get(i, w) - libm::log(p));
            }
        }
    }
    bound
}

/// How topic-word distributions are initialized before the first E-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BetaInit {
    /// Every topic starts at the uniform distribution. All topics stay
    /// identical under EM, so this is mainly a diagnostic.
    Uniform,
    /// Seeded random weights `1/V + U(0, 1)`, normalized per topic.
    #[default]
    Random,
}

/// Variational EM settings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub num_topics: usize,
    /// Symmetric Dirichlet prior; `None` means `50 / K`.
    pub alpha: Option<f64>,
    /// Relative corpus-ELBO improvement below which EM stops.
    pub em_tol: f64,
    pub em_max_iter: usize,
    pub inference: InferenceSettings,
    pub init: BetaInit,
    pub seed: u64,
    /// Pseudo-count added to every (topic, word) cell in the M-step.
    pub smoothing: f64,
}

impl EmConfig {
    pub fn new(num_topics: usize) -> Self {
        Self {
            num_topics,
            alpha: None,
            em_tol: 1e-4,
            em_max_iter: 50,
            inference: InferenceSettings::default(),
            init: BetaInit::Random,
            seed: 0,
            smoothing: 1e-3,
        }
    }

    pub fn alpha_value(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.num_topics as f64)
    }
}

/// Result of [`train_em`].
#[derive(Debug, Clone)]
pub struct EmFit {
    pub model: LdaModel,
    /// Corpus ELBO of every E-step, in order.
    pub elbo_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl AsRef<TfVector> for LabeledTf {
    fn as_ref(&self) -> &TfVector {
        &self.tf
    }
}

impl AsRef<TfVector> for TfVector {
    fn as_ref(&self) -> &TfVector {
        self
    }
}

/// Fits topic-word distributions by variational EM with a fixed symmetric
/// prior. Deterministic for a given config, independent of thread count.
pub fn train_em<D>(docs: &[D], vocab_size: usize, config: &EmConfig) -> Result<EmFit>
where
    D: AsRef<TfVector> + Sync,
{
    let k = config.num_topics;
    if k < 2 {
        return Err(Error::InvalidArgument(format!("LDA needs at least 2 topics, got {k}")));
    }
    if docs.is_empty() {
        return Err(Error::InvalidArgument("cannot train on an empty corpus".into()));
    }
    if vocab_size == 0 {
        return Err(Error::InvalidArgument("empty vocabulary".into()));
    }
    if config.em_max_iter == 0 || !(config.em_tol >= 0.0) || !(config.smoothing >= 0.0) {
        return Err(Error::InvalidArgument("invalid EM settings".into()));
    }
    config.inference.validate()?;
    for d in docs {
        d.as_ref().check_dim(vocab_size)?;
    }
    let alpha = vec![config.alpha_value(); k];

    let mut weights = Matrix::zeros(k, vocab_size);
    match config.init {
        BetaInit::Uniform => weights.as_mut_slice().iter_mut().for_each(|x| *x = 1.0),
        BetaInit::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let base = 1.0 / vocab_size as f64;
            for x in weights.as_mut_slice() {
                *x = base + rng.random::<f64>();
            }
        }
    }
    let mut model = m_step(alpha.clone(), &weights, 0.0)?;

    let mut history = Vec::new();
    let mut converged = false;
    for iter in 1..=config.em_max_iter {
        let (corpus_elbo, stats) = e_step(&model, docs, config.inference);
        log::debug!("EM iteration {iter}: corpus ELBO {corpus_elbo}");
        model = m_step(alpha.clone(), &stats, config.smoothing)?;
        if let Some(&prev) = history.last() {
            let rel: f64 = (corpus_elbo - prev) / f64::abs(prev);
            history.push(corpus_elbo);
            if rel.abs() < config.em_tol {
                converged = true;
                break;
            }
        } else {
            history.push(corpus_elbo);
        }
    }
    Ok(EmFit { model, iterations: history.len(), elbo_history: history, converged })
}

// Number of documents whose variational states are held at once.
const E_STEP_CHUNK: usize = 512;

fn e_step<D>(model: &LdaModel, docs: &[D], settings: InferenceSettings) -> (f64, Matrix)
where
    D: AsRef<TfVector> + Sync,
{
    let mut stats = Matrix::zeros(model.num_topics(), model.vocab_size());
    let mut total = 0.0;
    for chunk in docs.chunks(E_STEP_CHUNK) {
        let infer_one = |d: &D| {
            let v = d.as_ref();
            let state = run_inference(model, v, settings);
            (elbo_unchecked(model, v, &state), state)
        };
        #[cfg(feature = "parallel")]
        let states: Vec<(f64, VariationalState)> = {
            use rayon::prelude::*;
            chunk.par_iter().map(infer_one).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let states: Vec<(f64, VariationalState)> = chunk.iter().map(infer_one).collect();

        // reduction in document order
        for (d, (bound, state)) in chunk.iter().zip(states) {
            total += bound;
            for (n, &(w, count)) in d.as_ref().entries().iter().enumerate() {
                let c = f64::from(count);
                for (i, p) in state.phi.row(n).iter().enumerate() {
                    let cell = i * stats.cols() + w;
                    stats.as_mut_slice()[cell] += c * p;
                }
            }
        }
    }
    (total, stats)
}

fn m_step(alpha: Vec<f64>, stats: &Matrix, smoothing: f64) -> Result<LdaModel> {
    let (k, v) = (stats.rows(), stats.cols());
    let mut log_beta = Matrix::zeros(k, v);
    for t in 0..k {
        let row = stats.row(t);
        let mass: f64 = row.iter().map(|x| x + smoothing).sum();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::DegenerateTopic { topic: t });
        }
        let ln_mass = libm::log(mass);
        for (dst, x) in log_beta.row_mut(t).iter_mut().zip(row) {
            *dst = libm::log(x + smoothing) - ln_mass;
        }
    }
    LdaModel::new(alpha, log_beta)
}
