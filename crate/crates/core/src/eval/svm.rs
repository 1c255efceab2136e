//! One-vs-rest linear SVM trained with Pegasos: stochastic subgradient
//! descent on the L2-regularized hinge loss.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    /// Regularization strength λ.
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Z-score features with training statistics before fitting.
    pub standardize: bool,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self { lambda: 1e-4, epochs: 50, seed: 0, standardize: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    /// C×K, one row per class.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    /// Class names in lexicographic order; row c of `weights` scores `labels[c]`.
    pub labels: Vec<String>,
    feature_mean: Vec<f64>,
    feature_scale: Vec<f64>,
}

impl LinearClassifier {
    pub fn margins(&self, x: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = x
            .iter()
            .zip(&self.feature_mean)
            .zip(&self.feature_scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect();
        (0..self.labels.len()).map(|c| dot(self.weights.row(c), &z) + self.bias[c]).collect()
    }

    /// Index into `labels` of the largest margin, lowest index on ties.
    pub fn classify_index(&self, x: &[f64]) -> usize {
        let m = self.margins(x);
        let mut best = 0;
        for (c, v) in m.iter().enumerate() {
            if *v > m[best] {
                best = c;
            }
        }
        best
    }

    pub fn classify(&self, x: &[f64]) -> &str {
        &self.labels[self.classify_index(x)]
    }
}

/// Trains one binary Pegasos SVM per class. Every class sees the same
/// seeded sample order.
pub fn train_classifier<S: AsRef<str>>(
    vectors: &[Vec<f64>],
    labels: &[S],
    config: &ClassifierConfig,
) -> Result<LinearClassifier> {
    if vectors.len() != labels.len() {
        return Err(Error::LengthMismatch { left: vectors.len(), right: labels.len() });
    }
    if !(config.lambda > 0.0) || config.epochs == 0 {
        return Err(Error::InvalidArgument("classifier needs λ > 0 and at least one epoch".into()));
    }
    let classes: Vec<String> =
        labels.iter().map(|l| String::from(l.as_ref())).collect::<BTreeSet<_>>().into_iter().collect();
    match classes.len() {
        0 => return Err(Error::InvalidArgument("no training vectors".into())),
        1 => return Err(Error::SingleClass(classes[0].clone())),
        _ => {}
    }
    let dim = vectors[0].len();
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
    }
    let n = vectors.len() as f64;
    let (mean, scale) = if config.standardize {
        let mean: Vec<f64> = (0..dim).map(|j| vectors.iter().map(|v| v[j]).sum::<f64>() / n).collect();
        let scale = (0..dim)
            .map(|j| {
                let var = vectors.iter().map(|v| (v[j] - mean[j]) * (v[j] - mean[j])).sum::<f64>() / n;
                let sd = libm::sqrt(var);
                if sd > 0.0 { sd } else { 1.0 }
            })
            .collect();
        (mean, scale)
    } else {
        (vec![0.0; dim], vec![1.0; dim])
    };
    // standardized features with a constant 1 appended for the bias
    let data: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.iter().zip(&mean).zip(&scale).map(|((x, m), s)| (x - m) / s).chain([1.0]).collect())
        .collect();
    let class_of: Vec<usize> =
        labels.iter().map(|l| classes.binary_search_by(|c| c.as_str().cmp(l.as_ref())).unwrap()).collect();

    let mut weights = Matrix::zeros(classes.len(), dim);
    let mut bias = vec![0.0; classes.len()];
    for c in 0..classes.len() {
        let w = pegasos(&data, |i| if class_of[i] == c { 1.0 } else { -1.0 }, config);
        weights.row_mut(c).copy_from_slice(&w[..dim]);
        bias[c] = w[dim];
    }
    Ok(LinearClassifier { weights, bias, labels: classes, feature_mean: mean, feature_scale: scale })
}

fn pegasos(data: &[Vec<f64>], target: impl Fn(usize) -> f64, config: &ClassifierConfig) -> Vec<f64> {
    let lambda = config.lambda;
    let radius = 1.0 / libm::sqrt(lambda);
    let mut w = vec![0.0; data[0].len()];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut t = 0usize;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let y = target(i);
            let x = &data[i];
            let violated = y * dot(&w, x) < 1.0;
            let shrink = 1.0 - eta * lambda;
            for (wj, xj) in w.iter_mut().zip(x) {
                *wj *= shrink;
                if violated {
                    *wj += eta * y * xj;
                }
            }
            let norm = libm::sqrt(dot(&w, &w));
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
        }
    }
    w
}

/// Fraction of `vectors` whose predicted class equals the given label.
pub fn accuracy<S: AsRef<str>>(clf: &LinearClassifier, vectors: &[Vec<f64>], labels: &[S]) -> Result<f64> {
    if vectors.len() != labels.len() {
        return Err(Error::LengthMismatch { left: vectors.len(), right: labels.len() });
    }
    if vectors.is_empty() {
        return Err(Error::InvalidArgument("no test vectors".into()));
    }
    let correct = vectors.iter().zip(labels).filter(|(v, l)| clf.classify(v) == l.as_ref()).count();
    Ok(correct as f64 / vectors.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn blobs(n_per: usize, centers: &[[f64; 2]], spread: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<String>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..n_per {
                xs.push(vec![
                    center[0] + spread * (rng.random::<f64>() - 0.5),
                    center[1] + spread * (rng.random::<f64>() - 0.5),
                ]);
                ys.push(alloc::format!("class{c}"));
            }
        }
        (xs, ys)
    }

    #[test]
    fn separable_two_class() {
        let (xs, ys) = blobs(20, &[[0.0, 0.0], [3.0, 3.0]], 1.0, 1);
        let clf = train_classifier(&xs, &ys, &ClassifierConfig::default()).unwrap();
        assert_eq!(accuracy(&clf, &xs, &ys).unwrap(), 1.0);
    }

    #[test]
    fn single_class_is_rejected() {
        let xs = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            train_classifier(&xs, &["a", "a"], &ClassifierConfig::default()),
            Err(Error::SingleClass(_))
        ));
    }

    #[test]
    fn swapping_label_names_swaps_predictions() {
        let (xs, ys) = blobs(15, &[[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]], 2.0, 2);
        let swap = |l: &String| match l.as_str() {
            "class0" => String::from("class1"),
            "class1" => String::from("class0"),
            other => String::from(other),
        };
        let swapped: Vec<String> = ys.iter().map(swap).collect();
        let a = train_classifier(&xs, &ys, &ClassifierConfig::default()).unwrap();
        let b = train_classifier(&xs, &swapped, &ClassifierConfig::default()).unwrap();
        for x in &xs {
            assert_eq!(swap(&String::from(a.classify(x))), b.classify(x));
        }
    }

    #[test]
    fn accuracy_matches_rescoring_of_weights() {
        let (xs, ys) = blobs(7, &[[0.0, 0.0], [2.0, 0.5], [1.0, 2.0]], 2.5, 3);
        let (xs, ys) = (xs[..20].to_vec(), ys[..20].to_vec());
        let clf = train_classifier(&xs, &ys, &ClassifierConfig { seed: 4, ..ClassifierConfig::default() }).unwrap();
        // brute-force oracle: recompute every margin from the raw parameters
        let mut correct = 0;
        for (x, y) in xs.iter().zip(&ys) {
            let z: Vec<f64> =
                (0..2).map(|j| (x[j] - clf.feature_mean[j]) / clf.feature_scale[j]).collect();
            let scores: Vec<f64> = (0..3)
                .map(|c| clf.weights.get(c, 0) * z[0] + clf.weights.get(c, 1) * z[1] + clf.bias[c])
                .collect();
            let mut best = 0;
            for c in 1..3 {
                if scores[c] > scores[best] {
                    best = c;
                }
            }
            if clf.labels[best] == *y {
                correct += 1;
            }
        }
        assert_eq!(accuracy(&clf, &xs, &ys).unwrap(), correct as f64 / 20.0);
    }

    #[test]
    fn training_is_deterministic() {
        let (xs, ys) = blobs(10, &[[0.0, 0.0], [1.0, 1.0]], 3.0, 5);
        let cfg = ClassifierConfig { seed: 9, ..ClassifierConfig::default() };
        assert_eq!(train_classifier(&xs, &ys, &cfg).unwrap(), train_classifier(&xs, &ys, &cfg).unwrap());
    }
}
