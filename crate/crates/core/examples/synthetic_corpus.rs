//! Writes a synthetic seed corpus and noise pool.
//!
//! cargo run --example synthetic_corpus -- data

use std::path::PathBuf;

use convsim::synthetic::{write_synthetic_noise, SyntheticCorpus};

fn main() -> convsim::Result<()> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    let corpus = SyntheticCorpus {
        num_speakers: 10,
        utterances_per_speaker: 30,
        ..Default::default()
    };
    let manifest = corpus.write(&root.join("corpus"))?;
    let noise = write_synthetic_noise(&root.join("noise"), 4, 10.0, 16000, 1)?;
    println!("utterances: {}", manifest.display());
    println!("noise:      {}", noise.display());
    Ok(())
}
