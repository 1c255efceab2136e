use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Tolerance on the sum of a probability vector.
pub const SIMPLEX_TOL: f64 = 1e-8;

/// A point on the K-simplex: a document's topic proportions.
///
/// Produced by the teacher (normalized variational Dirichlet parameter) and
/// by the student (softmax output).
#[derive(Debug, Clone, PartialEq)]
pub struct TopicMixture(Vec<f64>);

impl TopicMixture {
    /// Wraps `theta`, checking that it is a finite, nonnegative vector whose
    /// entries sum to one within [`SIMPLEX_TOL`].
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidArgument("empty topic mixture".into()));
        }
        if let Some(bad) = theta.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(Error::Domain(format!("mixture entry {bad} is not a probability")));
        }
        let sum: f64 = theta.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Domain(format!("mixture sums to {sum}")));
        }
        Ok(Self(theta))
    }

    /// Normalizes a nonnegative weight vector with a positive total.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::Domain(format!("cannot normalize weights with total {sum}")));
        }
        Ok(Self(weights.iter().map(|w| w / sum).collect()))
    }

    pub fn uniform(k: usize) -> Self {
        Self(alloc::vec![1.0 / k as f64; k])
    }

    pub(crate) fn from_vec_unchecked(theta: Vec<f64>) -> Self {
        Self(theta)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Shannon entropy in nats, with 0·ln 0 = 0.
    pub fn entropy(&self) -> f64 {
        -self
            .0
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| p * libm::log(*p))
            .sum::<f64>()
    }

    /// Index of the largest entry (lowest index on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.0.iter().enumerate() {
            if *v > self.0[best] {
                best = i;
            }
        }
        best
    }
}

impl AsRef<[f64]> for TopicMixture {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_off_simplex() {
        assert!(TopicMixture::new(vec![0.5, 0.6]).is_err());
        assert!(TopicMixture::new(vec![1.5, -0.5]).is_err());
        assert!(TopicMixture::new(vec![]).is_err());
        assert!(TopicMixture::new(vec![0.25; 4]).is_ok());
    }

    #[test]
    fn entropy_of_uniform() {
        let u = TopicMixture::uniform(4);
        assert!((u.entropy() - libm::log(4.0)).abs() < 1e-15);
    }
}
