//! Allocation-only core of the topic-model distillation toolkit.
//!
//! The crate is `no_std` (it needs `alloc` only) and holds every algorithm:
//!
//! * [`text`]: tokenizer, frequency-thresholded vocabulary, TF vectors.
//! * [`lda`]: the teacher, an LDA model fitted by variational EM, and its
//!   per-document variational inference producing topic mixtures.
//! * [`mlp`]: the student, a tanh feed-forward network with softmax output
//!   trained by SGD on the cross-entropy against the teacher's mixtures.
//! * [`eval`]: KL divergence, a PCA baseline and a linear SVM classifier.
//! * [`probe`]: one-hot probing of the student's hidden neurons.
//!
//! IO, timing, configuration and the command line live in the `topicdistill`
//! companion crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod error;
pub mod eval;
pub mod lda;
pub mod linalg;
pub mod mixture;
pub mod mlp;
pub mod probe;
pub mod special;
pub mod text;

pub use error::{Error, Result};
pub use mixture::TopicMixture;
pub use text::{TfVector, Vocabulary};
