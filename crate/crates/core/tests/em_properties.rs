//! Variational EM and SGD behaviour on corpora sampled from a known model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use topicdistill_core::lda::{infer, train_em, EmConfig, InferenceSettings};
use topicdistill_core::linalg::Matrix;
use topicdistill_core::mlp::{init_mlp, train_sgd, MlpArchitecture, TrainConfig, Variant};
use topicdistill_core::TfVector;

struct Sample {
    beta: Vec<Vec<f64>>,
    docs: Vec<TfVector>,
}

fn categorical(rng: &mut ChaCha8Rng, p: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

fn dirichlet(rng: &mut ChaCha8Rng, concentration: f64, dim: usize) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).unwrap();
    let draws: Vec<f64> = (0..dim).map(|_| gamma.sample(rng).max(f64::MIN_POSITIVE)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

fn sample_lda(k: usize, v: usize, n_docs: usize, len: usize, alpha: f64, eta: f64, seed: u64) -> Sample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta: Vec<Vec<f64>> = (0..k).map(|_| dirichlet(&mut rng, eta, v)).collect();
    let docs = (0..n_docs)
        .map(|_| {
            let theta = dirichlet(&mut rng, alpha, k);
            TfVector::from_indices((0..len).map(|_| {
                let z = categorical(&mut rng, &theta);
                categorical(&mut rng, &beta[z])
            }))
        })
        .collect();
    Sample { beta, docs }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn best_permutation_cosine(truth: &[Vec<f64>], learned: &[Vec<f64>]) -> f64 {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    perms
        .iter()
        .map(|p| (0..3).map(|i| cosine(&truth[i], &learned[p[i]])).sum::<f64>() / 3.0)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn em_recovers_known_topics() {
    let sample = sample_lda(3, 50, 500, 100, 0.5, 0.1, 17);
    let config = EmConfig { seed: 5, ..EmConfig::new(3) };
    let fit = train_em(&sample.docs, 50, &config).unwrap();
    let learned: Vec<Vec<f64>> = (0..3).map(|i| (0..50).map(|w| fit.model.beta(i, w)).collect()).collect();
    let score = best_permutation_cosine(&sample.beta, &learned);
    assert!(score >= 0.8, "mean best-permutation cosine {score}");
}

#[test]
fn em_elbo_never_decreases() {
    for seed in 0..4 {
        let sample = sample_lda(4, 30, 80, 60, 0.3, 0.2, 100 + seed);
        let config = EmConfig { seed, em_tol: 1e-7, em_max_iter: 25, ..EmConfig::new(4) };
        let fit = train_em(&sample.docs, 30, &config).unwrap();
        for w in fit.elbo_history.windows(2) {
            assert!(w[1] >= w[0] - 1e-6 * w[0].abs(), "seed {seed}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn trained_topics_are_distributions() {
    let sample = sample_lda(3, 20, 60, 40, 0.5, 0.3, 9);
    let fit = train_em(&sample.docs, 20, &EmConfig::new(3)).unwrap();
    for i in 0..3 {
        let row: Vec<f64> = (0..20).map(|w| fit.model.beta(i, w)).collect();
        assert!(row.iter().all(|p| *p > 0.0));
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn distillation_loss_decreases() {
    let sample = sample_lda(3, 40, 50, 80, 0.5, 0.1, 23);
    let truth = Matrix::from_fn(3, 40, |i, w| sample.beta[i][w]);
    let teacher = topicdistill_core::lda::LdaModel::from_beta(vec![0.5; 3], &truth).unwrap();
    let pairs: Vec<_> = sample
        .docs
        .iter()
        .map(|d| (d.clone(), infer(&teacher, d, InferenceSettings::default()).unwrap().0))
        .collect();
    let model = init_mlp(MlpArchitecture::new(Variant::TwoLayer, 40, 3).unwrap(), 1);
    let config = TrainConfig { epochs: 30, learning_rate: 0.01, ..TrainConfig::default() };
    let (_, history) = train_sgd(&model, &pairs, &config, &[]).unwrap();
    assert!(history.train.last().unwrap() < history.train.first().unwrap(), "{:?}", history.train);
}
