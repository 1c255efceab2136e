//! Experiment configuration: one TOML file describing a full run.
//!
//! Every field has a default, so a config only needs to name what differs.
//! Relative paths are resolved against the directory holding the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use topicdistill_core::eval::ClassifierConfig;
use topicdistill_core::lda::{BetaInit, EmConfig, InferenceSettings};
use topicdistill_core::mlp::{InputNorm, TrainConfig, Variant};
use topicdistill_core::text::Thresholds;

use crate::error::{AppError, AppResult};
use crate::io::read_text;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: PathBuf,
    pub output: PathBuf,
    pub topic_counts: Vec<usize>,
    pub thresholds: ThresholdSettings,
    pub lda: LdaSettings,
    pub distill: DistillSettings,
    pub eval: EvalSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            corpus: PathBuf::from("corpus.jsonl"),
            output: PathBuf::from("out"),
            topic_counts: vec![10, 20, 30, 40, 50, 60, 70],
            thresholds: ThresholdSettings::default(),
            lda: LdaSettings::default(),
            distill: DistillSettings::default(),
            eval: EvalSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSettings {
    pub min_doc_len: usize,
    pub min_word_freq: u32,
}

impl Default for ThresholdSettings {
    fn default() -> Self {
        Self { min_doc_len: 100, min_word_freq: 30 }
    }
}

impl From<ThresholdSettings> for Thresholds {
    fn from(t: ThresholdSettings) -> Self {
        Thresholds { min_doc_len: t.min_doc_len, min_word_freq: t.min_word_freq }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaSettings {
    /// Symmetric prior; absent means `50 / K`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub e_tol: f64,
    pub e_max_iter: usize,
    pub em_tol: f64,
    pub em_max_iter: usize,
    /// `random` or `uniform`.
    pub init: String,
    pub smoothing: f64,
    pub seed: u64,
}

impl Default for LdaSettings {
    fn default() -> Self {
        let em = EmConfig::new(2);
        Self {
            alpha: None,
            e_tol: em.inference.tol,
            e_max_iter: em.inference.max_iter,
            em_tol: em.em_tol,
            em_max_iter: em.em_max_iter,
            init: "random".into(),
            smoothing: em.smoothing,
            seed: 0,
        }
    }
}

pub fn parse_init(s: &str) -> Result<BetaInit, String> {
    match s {
        "random" => Ok(BetaInit::Random),
        "uniform" => Ok(BetaInit::Uniform),
        other => Err(format!("unknown init {other:?} (expected random or uniform)")),
    }
}

impl LdaSettings {
    pub fn inference(&self) -> InferenceSettings {
        InferenceSettings { tol: self.e_tol, max_iter: self.e_max_iter }
    }

    pub fn em_config(&self, num_topics: usize) -> AppResult<EmConfig> {
        Ok(EmConfig {
            num_topics,
            alpha: self.alpha,
            em_tol: self.em_tol,
            em_max_iter: self.em_max_iter,
            inference: self.inference(),
            init: parse_init(&self.init).map_err(|e| AppError::Config(vec![e]))?,
            seed: self.seed,
            smoothing: self.smoothing,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetSettings {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_decay: f64,
    pub shuffle: bool,
    pub momentum: f64,
    pub weight_decay: f64,
    /// `none` or `l1`.
    pub input_norm: String,
    pub seed: u64,
}

impl Default for NetSettings {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            batch_size: t.batch_size,
            lr_decay: t.lr_decay,
            shuffle: t.shuffle,
            momentum: t.momentum,
            weight_decay: t.weight_decay,
            input_norm: "none".into(),
            seed: t.seed,
        }
    }
}

impl NetSettings {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            lr_decay: self.lr_decay,
            shuffle: self.shuffle,
            momentum: self.momentum,
            weight_decay: self.weight_decay,
        }
    }

    pub fn input_norm(&self) -> AppResult<InputNorm> {
        Ok(InputNorm::from_str(&self.input_norm)?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillSettings {
    pub two_layer: NetSettings,
    pub three_layer: NetSettings,
}

impl DistillSettings {
    pub fn for_variant(&self, variant: Variant) -> &NetSettings {
        match variant {
            Variant::TwoLayer => &self.two_layer,
            Variant::ThreeLayer => &self.three_layer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSettings {
    pub lambda: f64,
    pub epochs: usize,
    pub standardize: bool,
    pub seed: u64,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        let c = ClassifierConfig::default();
        Self { lambda: c.lambda, epochs: c.epochs, standardize: c.standardize, seed: c.seed }
    }
}

impl From<&ClassifierSettings> for ClassifierConfig {
    fn from(c: &ClassifierSettings) -> Self {
        ClassifierConfig { lambda: c.lambda, epochs: c.epochs, seed: c.seed, standardize: c.standardize }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub repetitions: usize,
    pub classifier: ClassifierSettings,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self { repetitions: 10, classifier: ClassifierSettings::default() }
    }
}

impl ExperimentConfig {
    /// Sets every component seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.lda.seed = seed;
        self.distill.two_layer.seed = seed;
        self.distill.three_layer.seed = seed;
        self.eval.classifier.seed = seed;
    }

    /// Range and consistency violations, one per offending field.
    pub fn check(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut bad = |field: &str, message: &str| out.push(Diagnostic::new(field, message));
        if self.topic_counts.is_empty() {
            bad("topic_counts", "must list at least one topic count");
        }
        if self.topic_counts.iter().any(|k| *k < 2) {
            bad("topic_counts", "every topic count must be at least 2");
        }
        if self.topic_counts.windows(2).any(|w| w[0] >= w[1]) {
            bad("topic_counts", "must be strictly ascending");
        }
        if self.thresholds.min_word_freq < 1 {
            bad("thresholds.min_word_freq", "must be at least 1");
        }
        let l = &self.lda;
        if l.alpha.is_some_and(|a| !(a > 0.0 && a.is_finite())) {
            bad("lda.alpha", "must be positive");
        }
        if !(l.e_tol > 0.0) {
            bad("lda.e_tol", "must be positive");
        }
        if l.e_max_iter < 1 {
            bad("lda.e_max_iter", "must be at least 1");
        }
        if !(l.em_tol >= 0.0) {
            bad("lda.em_tol", "must be non-negative");
        }
        if l.em_max_iter < 1 {
            bad("lda.em_max_iter", "must be at least 1");
        }
        if let Err(e) = parse_init(&l.init) {
            bad("lda.init", &e);
        }
        if !(l.smoothing > 0.0) {
            bad("lda.smoothing", "must be positive");
        }
        for (name, n) in [("distill.two_layer", &self.distill.two_layer), ("distill.three_layer", &self.distill.three_layer)] {
            if !(n.learning_rate > 0.0 && n.learning_rate.is_finite()) {
                bad(&format!("{name}.learning_rate"), "must be positive");
            }
            if n.epochs < 1 {
                bad(&format!("{name}.epochs"), "must be at least 1");
            }
            if n.batch_size < 1 {
                bad(&format!("{name}.batch_size"), "must be at least 1");
            }
            if !(n.lr_decay > 0.0) {
                bad(&format!("{name}.lr_decay"), "must be positive");
            }
            if !(0.0..1.0).contains(&n.momentum) {
                bad(&format!("{name}.momentum"), "must lie in [0, 1)");
            }
            if !(n.weight_decay >= 0.0) {
                bad(&format!("{name}.weight_decay"), "must be non-negative");
            }
            if InputNorm::from_str(&n.input_norm).is_err() {
                bad(&format!("{name}.input_norm"), "must be none or l1");
            }
        }
        if self.eval.repetitions < 1 {
            bad("eval.repetitions", "must be at least 1");
        }
        if !(self.eval.classifier.lambda > 0.0) {
            bad("eval.classifier.lambda", "must be positive");
        }
        if self.eval.classifier.epochs < 1 {
            bad("eval.classifier.epochs", "must be at least 1");
        }
        out
    }

    fn resolve(&mut self, base: &Path) {
        if self.corpus.is_relative() {
            self.corpus = base.join(&self.corpus);
        }
        if self.output.is_relative() {
            self.output = base.join(&self.output);
        }
    }
}

/// One schema violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// Dotted path of the offending field.
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    fn new(field: &str, message: &str) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

// Optional keys absent from the serialized defaults, with their kind.
const OPTIONAL: &[(&str, &str)] = &[("lda.alpha", "float")];

fn kind(v: &toml::Value) -> &'static str {
    match v {
        toml::Value::String(_) => "string",
        toml::Value::Integer(_) => "integer",
        toml::Value::Float(_) => "float",
        toml::Value::Boolean(_) => "boolean",
        toml::Value::Datetime(_) => "datetime",
        toml::Value::Array(_) => "array",
        toml::Value::Table(_) => "table",
    }
}

fn compatible(want: &str, got: &toml::Value) -> bool {
    want == kind(got) || (want == "float" && matches!(got, toml::Value::Integer(_)))
}

// Walks the user table against the serialized defaults so that every unknown
// key and type mismatch is reported, not only the first.
// Reports unknown keys and type mismatches, removing them from `user` so
// the remainder still deserializes and can be range-checked.
fn check_shape(prefix: &str, user: &mut toml::Table, reference: &toml::Table, out: &mut Vec<Diagnostic>) {
    let before = out.len();
    let mut rejected = Vec::new();
    for (key, value) in user.iter_mut() {
        let reported = out.len();
        let field = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        let want = match reference.get(key) {
            Some(r) => r,
            None => {
                match OPTIONAL.iter().find(|(f, _)| *f == field) {
                    Some((_, want)) if !compatible(want, value) => {
                        out.push(Diagnostic::new(&field, &format!("expected {want}, found {}", kind(value))));
                    }
                    Some(_) => {}
                    None => out.push(Diagnostic::new(&field, "unknown field")),
                }
                if out.len() > reported {
                    rejected.push(key.clone());
                }
                continue;
            }
        };
        if let (toml::Value::Table(r), toml::Value::Table(u)) = (want, &mut *value) {
            check_shape(&field, u, r, out);
            continue;
        }
        let value = &*value;
        match (want, value) {
            (toml::Value::Array(_), toml::Value::Array(items)) => {
                if let Some(bad) = items.iter().find(|i| !matches!(i, toml::Value::Integer(n) if *n >= 0)) {
                    out.push(Diagnostic::new(&field, &format!("expected non-negative integers, found {}", kind(bad))));
                }
            }
            (toml::Value::Integer(_), toml::Value::Integer(n)) if *n < 0 => {
                out.push(Diagnostic::new(&field, "must be non-negative"));
            }
            _ if !compatible(kind(want), value) => {
                out.push(Diagnostic::new(&field, &format!("expected {}, found {}", kind(want), kind(value))));
            }
            _ => {}
        }
        if out.len() > reported {
            rejected.push(key.clone());
        }
    }
    if out.len() > before {
        for key in rejected {
            user.remove(&key);
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

// The config built from every well-formed field, if any, and all problems.
fn diagnose(path: &Path, text: &str) -> AppResult<(Option<ExperimentConfig>, Vec<Diagnostic>)> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| {
        let (line, col) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        AppError::parse(path, line, format!("column {col}: {}", e.message()))
    })?;
    let reference = toml::Table::try_from(ExperimentConfig::default()).expect("defaults serialize");
    let mut diagnostics = Vec::new();
    check_shape("", &mut table, &reference, &mut diagnostics);
    match toml::Value::Table(table).try_into::<ExperimentConfig>() {
        Ok(config) => {
            diagnostics.extend(config.check());
            Ok((Some(config), diagnostics))
        }
        Err(e) => {
            diagnostics.push(Diagnostic::new("", &e.to_string()));
            Ok((None, diagnostics))
        }
    }
}

/// Parses `text` and returns the config when it is valid, otherwise every
/// violation found. Syntax errors are returned as [`AppError::Parse`].
pub fn parse_config(path: &Path, text: &str) -> AppResult<Result<ExperimentConfig, Vec<Diagnostic>>> {
    Ok(match diagnose(path, text)? {
        (Some(config), d) if d.is_empty() => Ok(config),
        (_, d) => Err(d),
    })
}

/// Every violation in the config at `path`, including an unreadable corpus
/// path. Empty means valid.
pub fn validate_config(path: &Path) -> AppResult<Vec<Diagnostic>> {
    let text = read_text(path)?;
    let (config, mut diagnostics) = diagnose(path, &text)?;
    if let Some(mut config) = config {
        config.resolve(path.parent().unwrap_or(Path::new(".")));
        let corpus_named = !diagnostics.iter().any(|d| d.field == "corpus");
        if corpus_named && !config.corpus.is_file() {
            let message = format!("{} is not a readable file", config.corpus.display());
            diagnostics.insert(0, Diagnostic::new("corpus", &message));
        }
    }
    Ok(diagnostics)
}

/// Loads a valid config with paths resolved against its directory.
pub fn load_config(path: &Path) -> AppResult<ExperimentConfig> {
    let diagnostics = validate_config(path)?;
    if !diagnostics.is_empty() {
        return Err(AppError::Config(diagnostics.iter().map(|d| d.to_string()).collect()));
    }
    let text = read_text(path)?;
    let mut config = parse_config(path, &text)?.expect("validated above");
    config.resolve(path.parent().unwrap_or(Path::new(".")));
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, Vec<Diagnostic>> {
        parse_config(Path::new("x.toml"), text).unwrap()
    }

    #[test]
    fn empty_file_is_all_defaults() {
        assert_eq!(parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn overrides_apply() {
        let c = parse("topic_counts = [10]\n[lda]\nalpha = 2\ninit = \"uniform\"\n[distill.three_layer]\nlearning_rate = 0.2\n")
            .unwrap();
        assert_eq!(c.topic_counts, vec![10]);
        assert_eq!(c.lda.alpha, Some(2.0));
        assert_eq!(c.lda.em_config(10).unwrap().init, BetaInit::Uniform);
        assert_eq!(c.distill.three_layer.learning_rate, 0.2);
        assert_eq!(c.distill.two_layer, NetSettings::default());
    }

    #[test]
    fn every_violation_is_listed() {
        let d = parse(
            "topic_counts = [20, 10]\nbogus = 1\n[lda]\nalpha = \"x\"\ne_tol = true\n[distill.two_layer]\nepochs = 0\nwhat = 2\n",
        )
        .unwrap_err();
        let fields: Vec<&str> = d.iter().map(|d| d.field.as_str()).collect();
        assert!(fields.contains(&"bogus"));
        assert!(fields.contains(&"lda.alpha"));
        assert!(fields.contains(&"lda.e_tol"));
        assert!(fields.contains(&"distill.two_layer.what"));
        // range checks run once the shape is right
        let d = parse("topic_counts = [20, 10]\n[distill.two_layer]\nepochs = 0\nmomentum = 1.5\n").unwrap_err();
        let fields: Vec<&str> = d.iter().map(|d| d.field.as_str()).collect();
        assert_eq!(fields, ["topic_counts", "distill.two_layer.epochs", "distill.two_layer.momentum"]);
    }

    #[test]
    fn syntax_error_has_location() {
        let err = parse_config(Path::new("x.toml"), "a = 1\nb = [\n").unwrap_err();
        match err {
            AppError::Parse { line, .. } => assert!(line >= 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn seed_reaches_every_component() {
        let mut c = ExperimentConfig::default();
        c.set_seed(42);
        assert_eq!(c.lda.seed, 42);
        assert_eq!(c.distill.three_layer.seed, 42);
        assert_eq!(c.eval.classifier.seed, 42);
    }
}
