//! On-disk formats: the JSONL corpus, the prepared dataset bundle, model
//! files, topic-mixture tables and probe reports.
//!
//! Every writer goes through [`write_file`], which writes a sibling
//! temporary file and renames it into place, so an interrupted stage never
//! leaves a truncated output that a later resume would mistake for a
//! finished one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use topicdistill_core::lda::LdaModel;
use topicdistill_core::linalg::Matrix;
use topicdistill_core::mlp::{InputNorm, Layer, MlpArchitecture, MlpModel, Variant};
use topicdistill_core::probe::ProbeReport;
use topicdistill_core::text::{Dataset, LabeledTf, RawDocument, Thresholds};
use topicdistill_core::{TfVector, TopicMixture, Vocabulary};

use crate::error::{AppError, AppResult};

pub const FORMAT_VERSION: u32 = 1;

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> AppResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| AppError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| AppError::io(path, e))
}

pub fn read_text(path: &Path) -> AppResult<String> {
    fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("model types always serialize");
    text.push('\n');
    write_file(path, text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> AppResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| AppError::parse(path, e.line(), e.to_string()))
}

fn check_field(path: &Path, what: &str, value: &str) -> AppResult<()> {
    if value.contains(['\t', '\n', '\r']) {
        return Err(AppError::Data(format!(
            "{}: {what} {value:?} contains a tab or line break",
            path.display()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// corpus

/// One line of the input corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecord {
    pub id: String,
    pub label: String,
    pub text: String,
    pub split: String,
}

/// Which `split` values mark training and test documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub train: String,
    pub test: String,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train: "train".into(), test: "test".into() }
    }
}

/// Reads a JSONL corpus into `(train, test)` documents, preserving file
/// order. Blank lines are skipped.
pub fn read_corpus(path: &Path, split: &SplitSpec) -> AppResult<(Vec<RawDocument>, Vec<RawDocument>)> {
    let text = read_text(path)?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: CorpusRecord = serde_json::from_str(line).map_err(|e| AppError::parse(path, i + 1, e.to_string()))?;
        let doc = RawDocument::new(rec.id, rec.label, rec.text);
        if rec.split == split.train {
            train.push(doc);
        } else if rec.split == split.test {
            test.push(doc);
        } else {
            return Err(AppError::UnknownSplit { path: path.to_path_buf(), line: i + 1, split: rec.split });
        }
    }
    Ok((train, test))
}

pub fn write_corpus(path: &Path, records: &[CorpusRecord]) -> AppResult<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("corpus records always serialize"));
        out.push('\n');
    }
    write_file(path, out)
}

/// Reads a corpus and prepares it: length filter, training-split
/// vocabulary, TF vectors for both splits.
pub fn load_dataset(path: &Path, split: &SplitSpec, thresholds: Thresholds) -> AppResult<Dataset> {
    let (train, test) = read_corpus(path, split)?;
    Ok(Dataset::build(&train, &test, thresholds)?)
}

// ---------------------------------------------------------------------------
// dataset bundle

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn docs(self, dataset: &Dataset) -> &[LabeledTf] {
        match self {
            Split::Train => &dataset.train,
            Split::Test => &dataset.test,
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?} (expected train or test)")),
        }
    }
}

/// Summary written next to the bundle as `meta.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub version: u32,
    #[serde(rename = "V")]
    pub vocab_size: usize,
    pub min_doc_len: usize,
    pub min_word_freq: u32,
    pub train_docs: usize,
    pub test_docs: usize,
    pub labels: Vec<String>,
    /// Documents left with no in-vocabulary token.
    pub empty_train: usize,
    pub empty_test: usize,
}

impl BundleMeta {
    pub fn of(dataset: &Dataset) -> Self {
        let empty = |docs: &[LabeledTf]| docs.iter().filter(|d| d.tf.is_empty()).count();
        Self {
            version: FORMAT_VERSION,
            vocab_size: dataset.dim(),
            min_doc_len: dataset.thresholds.min_doc_len,
            min_word_freq: dataset.thresholds.min_word_freq,
            train_docs: dataset.train.len(),
            test_docs: dataset.test.len(),
            labels: dataset.labels.clone(),
            empty_train: empty(&dataset.train),
            empty_test: empty(&dataset.test),
        }
    }
}

pub fn format_tf_line(label: &str, tf: &TfVector) -> String {
    let mut line = String::from(label);
    line.push('\t');
    for (n, (i, c)) in tf.entries().iter().enumerate() {
        if n > 0 {
            line.push(' ');
        }
        write!(line, "{i}:{c}").unwrap();
    }
    line
}

pub fn parse_tf_line(line: &str, dim: usize) -> Result<(String, TfVector), String> {
    let (label, pairs) = line.split_once('\t').ok_or("missing tab after the label")?;
    let mut entries = Vec::new();
    for pair in pairs.split_whitespace() {
        let (i, c) = pair.split_once(':').ok_or_else(|| format!("malformed pair {pair:?}"))?;
        let i: usize = i.parse().map_err(|_| format!("bad index in {pair:?}"))?;
        let c: u32 = c.parse().map_err(|_| format!("bad count in {pair:?}"))?;
        if c == 0 {
            return Err(format!("zero count in {pair:?}"));
        }
        if i >= dim {
            return Err(format!("index {i} outside the vocabulary of {dim} words"));
        }
        if entries.last().is_some_and(|&(prev, _)| prev >= i) {
            return Err(format!("indices not strictly ascending at {pair:?}"));
        }
        entries.push((i, c));
    }
    Ok((label.to_string(), TfVector::from_pairs(entries)))
}

fn write_split(dir: &Path, split: Split, docs: &[LabeledTf]) -> AppResult<()> {
    let tf_path = dir.join(format!("{}.tf", split.name()));
    let ids_path = dir.join(format!("{}.ids", split.name()));
    let mut tf = String::new();
    let mut ids = String::new();
    for d in docs {
        check_field(&tf_path, "label", &d.label)?;
        check_field(&ids_path, "document id", &d.id)?;
        tf.push_str(&format_tf_line(&d.label, &d.tf));
        tf.push('\n');
        ids.push_str(&d.id);
        ids.push('\n');
    }
    write_file(&tf_path, tf)?;
    write_file(&ids_path, ids)
}

fn read_split(dir: &Path, split: Split, dim: usize) -> AppResult<Vec<LabeledTf>> {
    let tf_path = dir.join(format!("{}.tf", split.name()));
    let ids_path = dir.join(format!("{}.ids", split.name()));
    let tf_text = read_text(&tf_path)?;
    let ids_text = read_text(&ids_path)?;
    let tf_lines: Vec<&str> = tf_text.lines().collect();
    let ids: Vec<&str> = ids_text.lines().collect();
    if tf_lines.len() != ids.len() {
        return Err(AppError::Data(format!(
            "{} has {} lines but {} has {}",
            tf_path.display(),
            tf_lines.len(),
            ids_path.display(),
            ids.len()
        )));
    }
    tf_lines
        .iter()
        .zip(ids)
        .enumerate()
        .map(|(n, (line, id))| {
            let (label, tf) = parse_tf_line(line, dim).map_err(|m| AppError::parse(&tf_path, n + 1, m))?;
            Ok(LabeledTf { id: id.to_string(), label, tf })
        })
        .collect()
}

/// Writes `vocab.txt`, `{train,test}.tf`, `{train,test}.ids` and
/// `meta.json` into `dir`.
pub fn write_bundle(dir: &Path, dataset: &Dataset) -> AppResult<()> {
    write_vocabulary(&dir.join("vocab.txt"), &dataset.vocabulary)?;
    write_split(dir, Split::Train, &dataset.train)?;
    write_split(dir, Split::Test, &dataset.test)?;
    write_json(&dir.join("meta.json"), &BundleMeta::of(dataset))
}

pub fn read_bundle(dir: &Path) -> AppResult<Dataset> {
    let meta_path = dir.join("meta.json");
    let meta: BundleMeta = read_json(&meta_path)?;
    if meta.version != FORMAT_VERSION {
        return Err(AppError::parse(&meta_path, 1, format!("unsupported bundle version {}", meta.version)));
    }
    let vocabulary = read_vocabulary(&dir.join("vocab.txt"), meta.min_word_freq)?;
    if vocabulary.len() != meta.vocab_size {
        return Err(AppError::Data(format!(
            "vocab.txt holds {} words but meta.json says {}",
            vocabulary.len(),
            meta.vocab_size
        )));
    }
    let train = read_split(dir, Split::Train, vocabulary.len())?;
    let test = read_split(dir, Split::Test, vocabulary.len())?;
    let thresholds = Thresholds { min_doc_len: meta.min_doc_len, min_word_freq: meta.min_word_freq };
    Ok(Dataset { vocabulary, train, test, labels: meta.labels, thresholds })
}

pub fn write_vocabulary(path: &Path, vocab: &Vocabulary) -> AppResult<()> {
    let mut out = String::new();
    for w in vocab.words() {
        out.push_str(w);
        out.push('\n');
    }
    write_file(path, out)
}

pub fn read_vocabulary(path: &Path, min_freq: u32) -> AppResult<Vocabulary> {
    let words = read_text(path)?.lines().map(str::to_string).collect();
    Vocabulary::from_words(words, min_freq).map_err(|e| AppError::parse(path, 0, e.to_string()))
}

// ---------------------------------------------------------------------------
// models

#[derive(Debug, Serialize, Deserialize)]
struct LdaFile {
    version: u32,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "V")]
    v: usize,
    alpha: Vec<f64>,
    log_beta: Vec<f64>,
}

pub fn write_lda(path: &Path, model: &LdaModel) -> AppResult<()> {
    let file = LdaFile {
        version: FORMAT_VERSION,
        k: model.num_topics(),
        v: model.vocab_size(),
        alpha: model.alpha().to_vec(),
        log_beta: model.log_beta().as_slice().to_vec(),
    };
    write_json(path, &file)
}

pub fn read_lda(path: &Path) -> AppResult<LdaModel> {
    let f: LdaFile = read_json(path)?;
    if f.version != FORMAT_VERSION {
        return Err(AppError::parse(path, 1, format!("unsupported model version {}", f.version)));
    }
    let log_beta = Matrix::from_vec(f.k, f.v, f.log_beta)
        .ok_or_else(|| AppError::parse(path, 1, "log_beta length differs from K×V"))?;
    Ok(LdaModel::new(f.alpha, log_beta)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerFile {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MlpFile {
    version: u32,
    variant: String,
    #[serde(rename = "V")]
    v: usize,
    #[serde(rename = "K")]
    k: usize,
    #[serde(default = "default_norm")]
    input_norm: String,
    layers: Vec<LayerFile>,
}

fn default_norm() -> String {
    "none".into()
}

fn norm_name(norm: InputNorm) -> &'static str {
    match norm {
        InputNorm::None => "none",
        InputNorm::L1 => "l1",
    }
}

pub fn write_mlp(path: &Path, model: &MlpModel) -> AppResult<()> {
    let arch = model.architecture();
    let file = MlpFile {
        version: FORMAT_VERSION,
        variant: arch.variant.tag().into(),
        v: arch.input_dim,
        k: arch.output_dim,
        input_norm: norm_name(model.input_norm()).into(),
        layers: model
            .layers()
            .iter()
            .map(|l| LayerFile {
                rows: l.weights.rows(),
                cols: l.weights.cols(),
                weights: l.weights.as_slice().to_vec(),
                bias: l.bias.clone(),
            })
            .collect(),
    };
    write_json(path, &file)
}

pub fn read_mlp(path: &Path) -> AppResult<MlpModel> {
    let f: MlpFile = read_json(path)?;
    if f.version != FORMAT_VERSION {
        return Err(AppError::parse(path, 1, format!("unsupported model version {}", f.version)));
    }
    let variant = Variant::from_str(&f.variant)?;
    let norm = InputNorm::from_str(&f.input_norm)?;
    let arch = MlpArchitecture::new(variant, f.v, f.k)?;
    let layers = f
        .layers
        .into_iter()
        .map(|l| {
            let weights = Matrix::from_vec(l.rows, l.cols, l.weights)
                .ok_or_else(|| AppError::parse(path, 1, "layer weights length differs from rows×cols"))?;
            Ok(Layer { weights, bias: l.bias })
        })
        .collect::<AppResult<Vec<_>>>()?;
    Ok(MlpModel::from_layers(arch, layers, norm)?)
}

// ---------------------------------------------------------------------------
// topic mixtures

/// `id<TAB>theta_1<TAB>...<TAB>theta_K`, values in shortest round-trip form.
pub fn write_theta(path: &Path, rows: &[(String, TopicMixture)]) -> AppResult<()> {
    let mut out = String::new();
    for (id, theta) in rows {
        check_field(path, "document id", id)?;
        out.push_str(id);
        for x in theta.as_slice() {
            write!(out, "\t{x:?}").unwrap();
        }
        out.push('\n');
    }
    write_file(path, out)
}

pub fn read_theta(path: &Path) -> AppResult<Vec<(String, TopicMixture)>> {
    let text = read_text(path)?;
    let mut k = None;
    text.lines()
        .enumerate()
        .map(|(n, line)| {
            let mut fields = line.split('\t');
            let id = fields.next().unwrap_or_default().to_string();
            let values = fields
                .map(|f| f.parse::<f64>().map_err(|_| AppError::parse(path, n + 1, format!("bad value {f:?}"))))
                .collect::<AppResult<Vec<_>>>()?;
            if *k.get_or_insert(values.len()) != values.len() {
                return Err(AppError::parse(path, n + 1, "row length differs from the first row"));
            }
            let theta = TopicMixture::new(values).map_err(|e| AppError::parse(path, n + 1, e.to_string()))?;
            Ok((id, theta))
        })
        .collect()
}

/// Pairs each document with its mixture by id, in document order.
pub fn join_by_id(docs: &[LabeledTf], thetas: &[(String, TopicMixture)]) -> AppResult<Vec<(TfVector, TopicMixture)>> {
    let by_id: BTreeMap<&str, &TopicMixture> = thetas.iter().map(|(id, t)| (id.as_str(), t)).collect();
    docs.iter()
        .map(|d| {
            by_id
                .get(d.id.as_str())
                .map(|t| (d.tf.clone(), (*t).clone()))
                .ok_or_else(|| AppError::Data(format!("no topic mixture for document {:?}", d.id)))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// probe reports

/// `layer<TAB>neuron<TAB>word:activation...`, one line per hidden neuron.
pub fn format_probe(report: &ProbeReport) -> String {
    let mut out = String::new();
    for p in &report.profiles {
        write!(out, "{}\t{}", p.layer, p.neuron).unwrap();
        for w in &p.top_words {
            write!(out, "\t{}:{:?}", w.word, w.activation).unwrap();
        }
        out.push('\n');
    }
    out
}

/// `neuron<TAB>source:weight...` for each second-layer neuron.
pub fn format_edges(report: &ProbeReport) -> String {
    let mut out = String::new();
    for e in &report.edges {
        write!(out, "{}", e.neuron).unwrap();
        for (src, w) in &e.sources {
            write!(out, "\t{src}:{w:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Words of each `(layer, neuron)` line of a probe file, for comparisons.
pub fn parse_probe(text: &str) -> Result<BTreeMap<(usize, usize), Vec<String>>, String> {
    let mut out = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for (n, line) in text.lines().enumerate() {
        let mut fields = line.split('\t');
        let layer = fields.next().and_then(|f| f.parse().ok()).ok_or(format!("line {}: bad layer", n + 1))?;
        let neuron = fields.next().and_then(|f| f.parse().ok()).ok_or(format!("line {}: bad neuron", n + 1))?;
        if !seen.insert((layer, neuron)) {
            return Err(format!("line {}: duplicate neuron", n + 1));
        }
        let words = fields
            .map(|f| f.rsplit_once(':').map(|(w, _)| w.to_string()).ok_or(format!("line {}: bad pair", n + 1)))
            .collect::<Result<_, _>>()?;
        out.insert((layer, neuron), words);
    }
    Ok(out)
}
