//! Measurements comparing teacher and student: KL divergence between their
//! topic mixtures, a PCA baseline vectorizer and a linear SVM classifier.

mod kl;
mod pca;
mod svm;

pub use kl::{kl_divergence, mean_kl};
pub use pca::{pca_fit, FeatureRow, PcaModel};
pub use svm::{accuracy, train_classifier, ClassifierConfig, LinearClassifier};
