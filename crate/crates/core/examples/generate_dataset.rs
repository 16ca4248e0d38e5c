//! Generates a small sharded dataset and checks it does not depend on the
//! number of workers.

use std::fs;

use convsim::pipeline::{generate_dataset, SimulationConfig};
use convsim::synthetic::{write_synthetic_noise, SyntheticCorpus};

fn main() -> convsim::Result<()> {
    let work = std::env::temp_dir().join("convsim-generate-example");
    let source = SyntheticCorpus::default().write(&work.join("corpus"))?;
    let noise = write_synthetic_noise(&work.join("noise"), 3, 6.0, 16000, 2)?;

    let mut config = SimulationConfig::new(source, work.join("unset"));
    config.seed = 7;
    config.num_conversations = 8;
    config.target_duration = 60.0;
    config.num_speakers = vec![(2, 2.0), (3, 1.0)];
    config.acoustic.reverb = true;
    config.acoustic.noise = true;
    config.acoustic.noise_manifest = Some(noise);

    let mut merged = Vec::new();
    for workers in [1, 3] {
        config.num_workers = workers;
        config.output_dir = work.join(format!("out_{workers}"));
        let summary = generate_dataset(&config)?;
        println!(
            "{workers} worker(s): {} sessions, {:.3} h in {:.2} s",
            summary.conversations, summary.total_hours, summary.wall_seconds
        );
        merged.push(fs::read(&summary.manifest_path)?);
    }
    println!("merged manifests identical: {}", merged[0] == merged[1]);
    println!("output under {}", work.display());
    Ok(())
}
