//! Backpropagated gradients against central finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topicdistill_core::mlp::{gradient, init_mlp, mean_loss, MlpArchitecture, MlpModel, Variant};
use topicdistill_core::{TfVector, TopicMixture};

const STEP: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;
// below this magnitude both gradients count as zero for the relative error
const FLOOR: f64 = 1e-8;

fn random_batch(rng: &mut ChaCha8Rng, v: usize, k: usize, n: usize) -> Vec<(TfVector, TopicMixture)> {
    (0..n)
        .map(|_| {
            let tf = TfVector::from_pairs((0..v).map(|w| (w, rng.random_range(0..4u32))));
            let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
            (tf, TopicMixture::from_weights(&weights).unwrap())
        })
        .collect()
}

fn perturbed_loss(model: &MlpModel, batch: &[(TfVector, TopicMixture)], layer: usize, idx: usize, delta: f64) -> f64 {
    let mut m = model.clone();
    let l = &mut m.layers_mut()[layer];
    let nw = l.weights.as_slice().len();
    if idx < nw {
        l.weights.as_mut_slice()[idx] += delta;
    } else {
        l.bias[idx - nw] += delta;
    }
    mean_loss(&m, batch).unwrap()
}

/// Largest relative error between analytic and numeric gradients.
fn max_relative_error(model: &MlpModel, batch: &[(TfVector, TopicMixture)]) -> f64 {
    let analytic = gradient(model, batch).unwrap();
    let mut worst: f64 = 0.0;
    for (l, layer) in model.layers().iter().enumerate() {
        let n = layer.weights.as_slice().len() + layer.bias.len();
        let grads: Vec<f64> =
            analytic.layers[l].weights.as_slice().iter().chain(&analytic.layers[l].bias).copied().collect();
        for idx in 0..n {
            let numeric =
                (perturbed_loss(model, batch, l, idx, STEP) - perturbed_loss(model, batch, l, idx, -STEP)) / (2.0 * STEP);
            let a = grads[idx];
            let denom = a.abs().max(numeric.abs());
            let err = if denom < FLOOR { 0.0 } else { (a - numeric).abs() / denom };
            worst = worst.max(err);
        }
    }
    worst
}

#[test]
fn gradients_match_finite_differences_for_both_variants() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for variant in [Variant::TwoLayer, Variant::ThreeLayer] {
        for trial in 0..5 {
            let arch = MlpArchitecture::new(variant, 6, 3).unwrap();
            let model = init_mlp(arch, 100 + trial);
            let batch = random_batch(&mut rng, 6, 3, 1 + trial as usize);
            let err = max_relative_error(&model, &batch);
            assert!(err < REL_TOL, "{variant:?} trial {trial}: max relative error {err:e}");
        }
    }
}
