//! Neuron probing: push a one-hot word vector through the student and rank
//! vocabulary words by how strongly they activate each hidden neuron.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::mlp::MlpModel;
use crate::text::Vocabulary;

/// How "most significant activation" is ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ranking {
    /// Largest signed activation first.
    #[default]
    Signed,
    /// Largest absolute activation first.
    Absolute,
}

impl Ranking {
    fn key(self, x: f64) -> f64 {
        match self {
            Ranking::Signed => x,
            Ranking::Absolute => x.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSettings {
    /// Count placed on the probed word (1 = a single occurrence).
    pub scale: f64,
    pub ranking: Ranking,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self { scale: 1.0, ranking: Ranking::Signed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordActivation {
    pub index: usize,
    pub word: String,
    pub activation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronProfile {
    /// 1-based hidden layer.
    pub layer: usize,
    pub neuron: usize,
    pub top_words: Vec<WordActivation>,
}

/// Strongest incoming connections of a second-hidden-layer neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronEdges {
    pub neuron: usize,
    /// `(first-layer neuron, weight)`, strongest first.
    pub sources: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub profiles: Vec<NeuronProfile>,
    /// Empty for two-layer networks.
    pub edges: Vec<NeuronEdges>,
}

/// Post-tanh activation of every hidden neuron, one vector per hidden
/// layer, for the one-hot input of `word_index`.
pub fn probe_activations(model: &MlpModel, word_index: usize, scale: f64) -> Result<Vec<Vec<f64>>> {
    let dim = model.architecture().input_dim;
    if word_index >= dim {
        return Err(Error::IndexOutOfRange { index: word_index, limit: dim });
    }
    Ok(model.forward_sparse(&[(word_index, scale)]).0)
}

fn check_vocab(model: &MlpModel, vocab: &Vocabulary) -> Result<()> {
    let dim = model.architecture().input_dim;
    if vocab.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: vocab.len() });
    }
    Ok(())
}

// activations[layer][neuron][word]
fn all_activations(model: &MlpModel, scale: f64) -> Vec<Vec<Vec<f64>>> {
    let dim = model.architecture().input_dim;
    let hidden = model.architecture().hidden_dims();
    let mut out: Vec<Vec<Vec<f64>>> = hidden.iter().map(|h| (0..*h).map(|_| Vec::with_capacity(dim)).collect()).collect();
    for w in 0..dim {
        let acts = model.forward_sparse(&[(w, scale)]).0;
        for (layer, values) in acts.into_iter().enumerate() {
            for (neuron, a) in values.into_iter().enumerate() {
                out[layer][neuron].push(a);
            }
        }
    }
    out
}

fn rank(values: &[f64], n: usize, ranking: Ranking) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| match ranking.key(values[b]).total_cmp(&ranking.key(values[a])) {
        Ordering::Equal => a.cmp(&b),
        other => other,
    });
    order.truncate(n);
    order
}

fn profile(layer: usize, neuron: usize, acts: &[f64], vocab: &Vocabulary, n: usize, ranking: Ranking) -> NeuronProfile {
    let top_words = rank(acts, n, ranking)
        .into_iter()
        .map(|w| WordActivation { index: w, word: vocab.words()[w].clone(), activation: acts[w] })
        .collect();
    NeuronProfile { layer: layer + 1, neuron, top_words }
}

/// The `n` words that activate hidden neuron `neuron` of hidden layer
/// `layer` (1-based) the most, ties broken by ascending word index.
pub fn top_words(
    model: &MlpModel,
    vocab: &Vocabulary,
    layer: usize,
    neuron: usize,
    n: usize,
    settings: ProbeSettings,
) -> Result<NeuronProfile> {
    check_vocab(model, vocab)?;
    let hidden = model.architecture().hidden_dims();
    if layer == 0 || layer > hidden.len() {
        return Err(Error::IndexOutOfRange { index: layer, limit: hidden.len() + 1 });
    }
    if neuron >= hidden[layer - 1] {
        return Err(Error::IndexOutOfRange { index: neuron, limit: hidden[layer - 1] });
    }
    let acts: Vec<f64> = (0..vocab.len())
        .map(|w| model.forward_sparse(&[(w, settings.scale)]).0[layer - 1][neuron])
        .collect();
    Ok(profile(layer - 1, neuron, &acts, vocab, n, settings.ranking))
}

/// Profiles every hidden neuron, layer by layer. For three-layer networks
/// also lists, for each second-layer neuron, its `n` strongest incoming
/// first-layer connections.
pub fn probe_report(model: &MlpModel, vocab: &Vocabulary, n: usize, settings: ProbeSettings) -> Result<ProbeReport> {
    check_vocab(model, vocab)?;
    let acts = all_activations(model, settings.scale);
    let profiles = acts
        .iter()
        .enumerate()
        .flat_map(|(layer, neurons)| {
            neurons.iter().enumerate().map(move |(neuron, a)| profile(layer, neuron, a, vocab, n, settings.ranking))
        })
        .collect();
    let edges = if acts.len() >= 2 {
        let w = &model.layers()[1].weights;
        (0..w.rows())
            .map(|j| {
                let row = w.row(j);
                let sources = rank(row, n, settings.ranking).into_iter().map(|i| (i, row[i])).collect();
                NeuronEdges { neuron: j, sources }
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(ProbeReport { profiles, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::mlp::{init_mlp, InputNorm, Layer, MlpArchitecture, Variant};
    use alloc::string::ToString;
    use alloc::vec;

    fn vocab(n: usize) -> Vocabulary {
        Vocabulary::from_words((0..n).map(|i| alloc::format!("w{i}")).collect(), 1).unwrap()
    }

    fn hand_model() -> MlpModel {
        let arch = MlpArchitecture::new(Variant::TwoLayer, 2, 1).unwrap();
        let layers = vec![
            Layer { weights: Matrix::from_vec(2, 2, vec![0.3, -1.2, 2.0, 0.4]).unwrap(), bias: vec![-0.1, 0.25] },
            Layer { weights: Matrix::from_vec(1, 2, vec![1.0, 1.0]).unwrap(), bias: vec![0.0] },
        ];
        MlpModel::from_layers(arch, layers, InputNorm::None).unwrap()
    }

    #[test]
    fn hand_model_activations() {
        // tests/oracles/oracles.py
        let want = [
            [0.197_375_320_224_904_000_74, 0.978_026_114_738_813_639_92],
            [-0.861_723_159_313_306_364_29, 0.571_669_966_085_117_225_2],
        ];
        let model = hand_model();
        for w in 0..2 {
            let acts = probe_activations(&model, w, 1.0).unwrap();
            for j in 0..2 {
                assert!((acts[0][j] - want[w][j]).abs() < 1e-15);
            }
        }
        assert_eq!(probe_activations(&model, 2, 1.0), Err(Error::IndexOutOfRange { index: 2, limit: 2 }));
    }

    #[test]
    fn zero_weights_give_zero_activations() {
        let arch = MlpArchitecture::new(Variant::ThreeLayer, 4, 2).unwrap();
        let mut model = init_mlp(arch, 0);
        for l in model.layers_mut() {
            l.weights.as_mut_slice().iter_mut().for_each(|w| *w = 0.0);
        }
        for layer in probe_activations(&model, 3, 1.0).unwrap() {
            assert!(layer.iter().all(|a| *a == 0.0));
        }
    }

    #[test]
    fn dominant_word_ranks_first() {
        let arch = MlpArchitecture::new(Variant::TwoLayer, 5, 2).unwrap();
        let mut model = init_mlp(arch, 3);
        model.layers_mut()[0].weights.set(1, 3, 10.0);
        let vocab = Vocabulary::from_words(
            ["said", "mine", "ton", "gold", "zinc"].iter().map(|s| s.to_string()).collect(),
            1,
        )
        .unwrap();
        let p = top_words(&model, &vocab, 1, 1, 10, ProbeSettings::default()).unwrap();
        assert_eq!(p.top_words[0].word, "gold");
        assert_eq!(p.top_words.len(), 5);
        assert!(top_words(&model, &vocab, 2, 0, 10, ProbeSettings::default()).is_err());
        assert!(top_words(&model, &vocab, 1, 4, 10, ProbeSettings::default()).is_err());
    }

    #[test]
    fn ties_break_by_word_index() {
        let arch = MlpArchitecture::new(Variant::TwoLayer, 4, 1).unwrap();
        let mut model = init_mlp(arch, 3);
        model.layers_mut()[0].weights.row_mut(0).copy_from_slice(&[0.5, 0.9, 0.5, 0.9]);
        let p = top_words(&model, &vocab(4), 1, 0, 4, ProbeSettings::default()).unwrap();
        let idx: Vec<usize> = p.top_words.iter().map(|w| w.index).collect();
        assert_eq!(idx, vec![1, 3, 0, 2]);
    }

    #[test]
    fn absolute_ranking() {
        let arch = MlpArchitecture::new(Variant::TwoLayer, 3, 1).unwrap();
        let mut model = init_mlp(arch, 3);
        model.layers_mut()[0].weights.row_mut(0).copy_from_slice(&[0.5, -2.0, 1.0]);
        let abs = ProbeSettings { ranking: Ranking::Absolute, ..ProbeSettings::default() };
        let p = top_words(&model, &vocab(3), 1, 0, 3, abs).unwrap();
        assert_eq!(p.top_words.iter().map(|w| w.index).collect::<Vec<_>>(), vec![1, 2, 0]);
        let p = top_words(&model, &vocab(3), 1, 0, 3, ProbeSettings::default()).unwrap();
        assert_eq!(p.top_words.iter().map(|w| w.index).collect::<Vec<_>>(), vec![2, 0, 1]);
    }

    #[test]
    fn report_covers_every_hidden_neuron() {
        let arch = MlpArchitecture::new(Variant::ThreeLayer, 12, 3).unwrap();
        let model = init_mlp(arch, 8);
        let report = probe_report(&model, &vocab(12), 10, ProbeSettings::default()).unwrap();
        assert_eq!(report.profiles.len(), 9 + 6);
        assert_eq!(report.edges.len(), 6);
        for p in &report.profiles {
            assert_eq!(p.top_words.len(), 10);
            assert!(p.top_words.windows(2).all(|w| w[0].activation >= w[1].activation));
        }
        assert_eq!(report, probe_report(&model, &vocab(12), 10, ProbeSettings::default()).unwrap());
        assert!(probe_report(&model, &vocab(11), 10, ProbeSettings::default()).is_err());
    }
}
