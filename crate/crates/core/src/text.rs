//! Corpus preprocessing: tokenizer, vocabulary, document filtering and
//! term-frequency vectors.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Minimum token length in characters.
const MIN_TOKEN_CHARS: usize = 2;

/// A labeled document as read from the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub id: String,
    pub label: String,
    pub text: String,
}

impl RawDocument {
    pub fn new(id: impl Into<String>, label: impl Into<String>, text: impl Into<String>) -> Self {
        Self { id: id.into(), label: label.into(), text: text.into() }
    }
}

/// Lowercases `text` and splits it on every non-alphabetic character,
/// dropping tokens shorter than two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(|t| t.chars().flat_map(char::to_lowercase).collect::<String>())
        .filter(|t| t.chars().count() >= MIN_TOKEN_CHARS)
        .collect()
}

/// Word ↔ index mapping. Words are stored in index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: BTreeMap<String, usize>,
    min_freq: u32,
}

impl Vocabulary {
    /// Builds a vocabulary from an explicit word list (e.g. a saved
    /// `vocab.txt`). Duplicate words are rejected.
    pub fn from_words(words: Vec<String>, min_freq: u32) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate vocabulary word {w:?}")));
            }
        }
        Ok(Self { words, index, min_freq })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, index: usize) -> Option<&str> {
        self.words.get(index).map(String::as_str)
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn min_freq(&self) -> u32 {
        self.min_freq
    }
}

/// Counts tokens over `docs` and keeps those with frequency ≥ `min_word_freq`,
/// ordered by descending frequency, ties broken lexicographically.
pub fn build_vocabulary(docs: &[RawDocument], min_word_freq: u32) -> Result<Vocabulary> {
    if min_word_freq == 0 {
        return Err(Error::InvalidArgument("min_word_freq must be at least 1".into()));
    }
    let mut freq: BTreeMap<String, u64> = BTreeMap::new();
    for doc in docs {
        for tok in tokenize(&doc.text) {
            *freq.entry(tok).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(String, u64)> =
        freq.into_iter().filter(|(_, f)| *f >= u64::from(min_word_freq)).collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary { min_freq: min_word_freq });
    }
    // BTreeMap iteration is already lexicographic; a stable sort keeps that on ties.
    kept.sort_by(|a, b| b.1.cmp(&a.1));
    Vocabulary::from_words(kept.into_iter().map(|(w, _)| w).collect(), min_word_freq)
}

/// Keeps the documents with at least `min_length` tokens, in input order.
pub fn filter_documents(docs: &[RawDocument], min_length: usize) -> Vec<RawDocument> {
    docs.iter().filter(|d| tokenize(&d.text).len() >= min_length).cloned().collect()
}

/// Sparse term-frequency vector: `(word index, count)` pairs with strictly
/// ascending indices and counts ≥ 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TfVector {
    entries: Vec<(usize, u32)>,
    total: u64,
}

impl TfVector {
    /// Builds a vector from `(index, count)` pairs in any order. Repeated
    /// indices are summed and zero counts dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let mut map: BTreeMap<usize, u32> = BTreeMap::new();
        for (i, c) in pairs {
            if c > 0 {
                *map.entry(i).or_insert(0) += c;
            }
        }
        let total = map.values().map(|c| u64::from(*c)).sum();
        Self { entries: map.into_iter().collect(), total }
    }

    /// Counts occurrences of each index in `indices`.
    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        Self::from_pairs(indices.into_iter().map(|i| (i, 1)))
    }

    pub fn entries(&self) -> &[(usize, u32)] {
        &self.entries
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct words.
    pub fn distinct(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One past the largest stored index (0 when empty).
    pub fn min_dim(&self) -> usize {
        self.entries.last().map_or(0, |(i, _)| i + 1)
    }

    /// Fails with `DimensionMismatch` when an index is ≥ `dim`.
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self.min_dim() {
            d if d > dim => Err(Error::DimensionMismatch { expected: dim, found: d }),
            _ => Ok(()),
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = alloc::vec![0.0; dim];
        for &(i, c) in &self.entries {
            out[i] = f64::from(c);
        }
        out
    }
}

/// Counts the in-vocabulary tokens of `doc`. Out-of-vocabulary tokens are
/// dropped; an all-OOV document yields an empty vector (check
/// [`TfVector::is_empty`]).
pub fn vectorize(doc: &RawDocument, vocab: &Vocabulary) -> TfVector {
    TfVector::from_indices(tokenize(&doc.text).iter().filter_map(|t| vocab.index_of(t)))
}

/// A vectorized document with its id and class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledTf {
    pub id: String,
    pub label: String,
    pub tf: TfVector,
}

/// Preprocessing thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Thresholds {
    pub min_doc_len: usize,
    pub min_word_freq: u32,
}

/// Train/test split vectorized against a vocabulary built from the
/// training documents only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub vocabulary: Vocabulary,
    pub train: Vec<LabeledTf>,
    pub test: Vec<LabeledTf>,
    /// Distinct class names in lexicographic order.
    pub labels: Vec<String>,
    pub thresholds: Thresholds,
}

impl Dataset {
    /// Filters both splits by length, builds the vocabulary from the kept
    /// training documents and vectorizes both splits against it.
    pub fn build(train: &[RawDocument], test: &[RawDocument], thresholds: Thresholds) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for doc in train.iter().chain(test) {
            if doc.label.is_empty() {
                return Err(Error::InvalidArgument(format!("document {:?} has an empty label", doc.id)));
            }
            if !ids.insert(doc.id.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate document id {:?}", doc.id)));
            }
        }
        let train = filter_documents(train, thresholds.min_doc_len);
        let test = filter_documents(test, thresholds.min_doc_len);
        let vocabulary = build_vocabulary(&train, thresholds.min_word_freq)?;
        let encode = |docs: &[RawDocument]| -> Vec<LabeledTf> {
            docs.iter()
                .map(|d| LabeledTf { id: d.id.clone(), label: d.label.clone(), tf: vectorize(d, &vocabulary) })
                .collect()
        };
        let (train, test) = (encode(&train), encode(&test));
        let labels = train
            .iter()
            .chain(&test)
            .map(|d| d.label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Ok(Self { vocabulary, train, test, labels, thresholds })
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn doc(id: &str, text: &str) -> RawDocument {
        RawDocument::new(id, "x", text)
    }

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Gold, Copper mine."), strings(&["gold", "copper", "mine"]));
        assert!(tokenize("").is_empty());
        assert!(tokenize("a b2c").is_empty());
        assert_eq!(tokenize("Zürich's ÉCOLE"), strings(&["zürich", "école"]));
    }

    #[test]
    fn vocabulary_threshold_and_order() {
        let v = build_vocabulary(&[doc("1", "xx xx"), doc("2", "xx yy")], 2).unwrap();
        assert_eq!(v.words(), &strings(&["xx"])[..]);

        // "a1 b1 a1" tokenizes to [a, b, a] under the split rule, all too short.
        assert!(matches!(
            build_vocabulary(&[doc("1", "a1 b1 a1")], 1),
            Err(Error::EmptyVocabulary { .. })
        ));
        let v = build_vocabulary(&[doc("1", "aa bb aa")], 1).unwrap();
        assert_eq!(v.words(), &strings(&["aa", "bb"])[..]);

        let v = build_vocabulary(&[doc("1", "zz yy xx zz")], 1).unwrap();
        assert_eq!(v.words(), &strings(&["zz", "xx", "yy"])[..]);
    }

    #[test]
    fn vocabulary_rejects_zero_threshold_and_duplicates() {
        assert!(build_vocabulary(&[doc("1", "aa")], 0).is_err());
        assert!(Vocabulary::from_words(strings(&["aa", "aa"]), 1).is_err());
    }

    #[test]
    fn filter_examples() {
        let docs = vec![doc("1", "aa bb cc"), doc("2", "aa bb cc dd ee"), doc("3", "aa bb cc dd")];
        assert_eq!(filter_documents(&docs, 0), docs);
        let kept = filter_documents(&docs, 4);
        assert_eq!(kept.iter().map(|d| d.id.as_str()).collect::<Vec<_>>(), ["2", "3"]);
    }

    #[test]
    fn vectorize_examples() {
        let vocab = Vocabulary::from_words(strings(&["gold", "mine", "zinc"]), 1).unwrap();
        let tf = vectorize(&doc("1", "gold gold mine"), &vocab);
        assert_eq!(tf.entries(), &[(0, 2), (1, 1)]);
        assert_eq!(tf.total(), 3);

        let tf = vectorize(&doc("1", "silver copper"), &vocab);
        assert!(tf.is_empty());
        assert_eq!(tf.total(), 0);

        let tf = vectorize(&doc("1", "zinc mine zinc"), &vocab);
        assert_eq!(tf.entries(), &[(1, 1), (2, 2)]);
    }

    #[test]
    fn tf_dimension_check() {
        let tf = TfVector::from_pairs([(4, 1), (1, 2), (4, 3), (2, 0)]);
        assert_eq!(tf.entries(), &[(1, 2), (4, 4)]);
        assert_eq!(tf.total(), 6);
        assert!(tf.check_dim(5).is_ok());
        assert_eq!(tf.check_dim(4), Err(Error::DimensionMismatch { expected: 4, found: 5 }));
        assert_eq!(tf.to_dense(5), vec![0.0, 2.0, 0.0, 0.0, 4.0]);
    }

    #[test]
    fn dataset_uses_train_vocabulary_only() {
        let train = vec![RawDocument::new("a", "p", "gold gold mine"), RawDocument::new("b", "q", "mine zinc")];
        let test = vec![RawDocument::new("c", "r", "gold silver silver")];
        let t = Thresholds { min_doc_len: 2, min_word_freq: 1 };
        let ds = Dataset::build(&train, &test, t).unwrap();
        assert_eq!(ds.vocabulary.words(), &strings(&["gold", "mine", "zinc"])[..]);
        assert_eq!(ds.test[0].tf.entries(), &[(0, 1)]);
        assert_eq!(ds.labels, strings(&["p", "q", "r"]));

        let dup = vec![RawDocument::new("a", "p", "gold gold")];
        assert!(Dataset::build(&train, &dup, t).is_err());
    }

    fn corpus() -> impl Strategy<Value = Vec<RawDocument>> {
        let word = prop::sample::select(vec!["gold", "mine", "zinc", "ton", "ore", "said", "x", "b2"]);
        prop::collection::vec(prop::collection::vec(word, 0..30), 1..12).prop_map(|docs| {
            docs.into_iter()
                .enumerate()
                .map(|(i, ws)| RawDocument::new(i.to_string(), "c", ws.join(" ")))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn vocabulary_round_trip(docs in corpus(), min in 1u32..4) {
            if let Ok(v) = build_vocabulary(&docs, min) {
                for (i, w) in v.words().iter().enumerate() {
                    prop_assert_eq!(v.index_of(w), Some(i));
                }
            }
        }

        #[test]
        fn filter_is_idempotent(docs in corpus(), min in 0usize..20) {
            let once = filter_documents(&docs, min);
            prop_assert_eq!(filter_documents(&once, min), once);
        }

        #[test]
        fn vectorize_total_bounded_by_tokens(docs in corpus()) {
            if let Ok(v) = build_vocabulary(&docs, 2) {
                for d in &docs {
                    let tf = vectorize(d, &v);
                    prop_assert!(tf.total() as usize <= tokenize(&d.text).len());
                    prop_assert!(tf.check_dim(v.len()).is_ok());
                    prop_assert!(tf.entries().iter().all(|(_, c)| *c >= 1));
                }
            }
        }

        #[test]
        fn higher_threshold_gives_subset(docs in corpus(), t1 in 1u32..4, extra in 1u32..4) {
            let t2 = t1 + extra;
            if let Ok(high) = build_vocabulary(&docs, t2) {
                let low = build_vocabulary(&docs, t1).unwrap();
                for w in high.words() {
                    prop_assert!(low.index_of(w).is_some());
                }
            }
        }
    }
}
