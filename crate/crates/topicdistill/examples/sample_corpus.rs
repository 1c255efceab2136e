//! Regenerates `data/sample_corpus.jsonl`:
//!
//! ```text
//! cargo run -p topicdistill --example sample_corpus
//! ```

use std::path::Path;

use topicdistill::io::write_corpus;
use topicdistill::synth::{generate, SynthSpec};

fn main() -> anyhow::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample_corpus.jsonl");
    let corpus = generate(&SynthSpec::sample_corpus());
    write_corpus(&path, &corpus.records)?;
    println!("wrote {} documents to {}", corpus.records.len(), path.display());
    Ok(())
}
