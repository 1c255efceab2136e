//! Command-line companion of `topicdistill-core`: corpus and model file
//! formats, the synthetic corpus generator, the inference-speed benchmark,
//! experiment configuration and the staged pipeline behind the
//! `topicdistill` binary.

pub mod bench;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod stages;
pub mod sweep;
pub mod synth;

pub use error::{AppError, AppResult};
