//! Labeled corpora sampled from a known LDA model over pseudo-words.
//!
//! Each class owns a disjoint block of topics. A document of class `c`
//! draws a `class_weight` share of its tokens from `c`'s topics and the rest
//! from all topics, so classes are separable through their topic mixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use topicdistill_core::TfVector;

use crate::io::CorpusRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub num_classes: usize,
    pub topics_per_class: usize,
    pub vocab_size: usize,
    pub docs_per_class: usize,
    /// Inclusive token-count range.
    pub doc_len: (usize, usize),
    /// Share of each class's documents placed in the test split.
    pub test_fraction: f64,
    /// Dirichlet concentration of each topic's word distribution.
    pub word_concentration: f64,
    /// Dirichlet concentration of document topic mixtures.
    pub topic_concentration: f64,
    pub class_weight: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Settings of the bundled `data/sample_corpus.jsonl`.
    pub fn sample_corpus() -> Self {
        Self {
            num_classes: 4,
            topics_per_class: 3,
            vocab_size: 400,
            docs_per_class: 50,
            doc_len: (120, 200),
            test_fraction: 0.25,
            word_concentration: 0.05,
            topic_concentration: 0.5,
            class_weight: 0.8,
            seed: 20_160_318,
        }
    }

    pub fn num_topics(&self) -> usize {
        self.num_classes * self.topics_per_class
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub records: Vec<CorpusRecord>,
    /// True topic-word distributions, one row per topic.
    pub beta: Vec<Vec<f64>>,
    pub words: Vec<String>,
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Deterministic alphabetic word for index `i`; distinct indices give
/// distinct words.
pub fn pseudo_word(i: usize) -> String {
    let n = CONSONANTS.len() * VOWELS.len();
    // all words with `len` syllables come before any with `len + 1`
    let mut len = 2;
    let mut rest = i;
    while rest >= n.pow(len) {
        rest -= n.pow(len);
        len += 1;
    }
    let mut out = String::with_capacity(2 * len as usize);
    for _ in 0..len {
        let s = rest % n;
        out.push(CONSONANTS[s / VOWELS.len()] as char);
        out.push(VOWELS[s % VOWELS.len()] as char);
        rest /= n;
    }
    out
}

pub fn dirichlet(rng: &mut impl Rng, concentration: f64, dim: usize) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("positive concentration");
    let draws: Vec<f64> = (0..dim).map(|_| gamma.sample(rng).max(f64::MIN_POSITIVE)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

pub fn categorical(rng: &mut impl Rng, p: &[f64]) -> usize {
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

fn sample_tokens(rng: &mut impl Rng, theta: &[f64], beta: &[Vec<f64>], len: usize) -> Vec<usize> {
    (0..len)
        .map(|_| {
            let z = categorical(rng, theta);
            categorical(rng, &beta[z])
        })
        .collect()
}

pub fn generate(spec: &SynthSpec) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = spec.num_topics();
    let words: Vec<String> = (0..spec.vocab_size).map(pseudo_word).collect();
    let beta: Vec<Vec<f64>> = (0..k).map(|_| dirichlet(&mut rng, spec.word_concentration, spec.vocab_size)).collect();
    let n_test = (spec.docs_per_class as f64 * spec.test_fraction).round() as usize;
    let mut records = Vec::with_capacity(spec.num_classes * spec.docs_per_class);
    for d in 0..spec.docs_per_class {
        for c in 0..spec.num_classes {
            let own = dirichlet(&mut rng, spec.topic_concentration, spec.topics_per_class);
            let background = dirichlet(&mut rng, spec.topic_concentration, k);
            let mut theta: Vec<f64> = background.iter().map(|x| x * (1.0 - spec.class_weight)).collect();
            for (t, w) in own.iter().enumerate() {
                theta[c * spec.topics_per_class + t] += spec.class_weight * w;
            }
            let len = rng.random_range(spec.doc_len.0..=spec.doc_len.1);
            let text = sample_tokens(&mut rng, &theta, &beta, len)
                .into_iter()
                .map(|w| words[w].as_str())
                .collect::<Vec<_>>()
                .join(" ");
            let split = if d >= spec.docs_per_class - n_test { "test" } else { "train" };
            records.push(CorpusRecord {
                id: format!("d{:04}", records.len()),
                label: format!("class{c}"),
                text,
                split: split.into(),
            });
        }
    }
    SynthCorpus { records, beta, words }
}

/// Unlabeled TF vectors drawn from a symmetric LDA model, with the true
/// topic-word distributions.
pub fn sample_lda(
    k: usize,
    v: usize,
    n_docs: usize,
    len: usize,
    alpha: f64,
    word_concentration: f64,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<TfVector>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta: Vec<Vec<f64>> = (0..k).map(|_| dirichlet(&mut rng, word_concentration, v)).collect();
    let docs = (0..n_docs)
        .map(|_| {
            let theta = dirichlet(&mut rng, alpha, k);
            TfVector::from_indices(sample_tokens(&mut rng, &theta, &beta, len))
        })
        .collect();
    (beta, docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;
    use topicdistill_core::text::tokenize;

    #[test]
    fn pseudo_words_are_distinct_tokens() {
        let words: Vec<String> = (0..12_000).map(pseudo_word).collect();
        assert_eq!(words.iter().collect::<BTreeSet<_>>().len(), words.len());
        for w in &words {
            assert_eq!(tokenize(w), vec![w.clone()]);
        }
        assert_eq!(pseudo_word(0), "baba");
    }

    #[test]
    fn generated_corpus_shape() {
        let spec = SynthSpec { docs_per_class: 8, ..SynthSpec::sample_corpus() };
        let corpus = generate(&spec);
        assert_eq!(corpus.records.len(), 32);
        assert_eq!(corpus.records.iter().filter(|r| r.split == "test").count(), 8);
        for r in &corpus.records {
            let n = tokenize(&r.text).len();
            assert!((120..=200).contains(&n));
        }
        assert_eq!(corpus.beta.len(), 12);
        assert_eq!(generate(&spec).records, corpus.records);
    }

    #[test]
    fn lda_sample_is_reproducible() {
        let (beta, docs) = sample_lda(3, 20, 10, 30, 0.5, 0.2, 1);
        assert_eq!(beta.len(), 3);
        assert!(docs.iter().all(|d| d.total() == 30 && d.min_dim() <= 20));
        assert_eq!(sample_lda(3, 20, 10, 30, 0.5, 0.2, 1).1, docs);
    }
}
