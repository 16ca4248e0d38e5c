//! Renders one reverberant, noisy session to WAV with its RTTM.
//!
//! cargo run --example render_session -- session.wav

use std::fs::File;
use std::path::PathBuf;

use convsim::acoustics::AcousticConfig;
use convsim::corpus_io::{write_rttm, write_wav, WavFormat};
use convsim::planner::{build_plan, PlanRequest};
use convsim::renderer::{prepare_setup, render, SourceCatalog};
use convsim::synthetic::{synthetic_noise, SyntheticCorpus};
use convsim::turntaking::Recipe;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> convsim::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "session.wav".into()));
    let (pools, mut loader) = SyntheticCorpus::default().generate();
    let (noise, noise_audio) = synthetic_noise(2, 8.0, 16000, 5);
    for n in &noise {
        let samples = noise_audio.samples(&n.audio.path).expect("generated").to_vec();
        loader.insert(n.audio.path.clone(), samples);
    }

    let request = PlanRequest {
        session_id: "rendered".into(),
        num_speakers: 2,
        target_duration: 30.0,
        gain_range_db: (-3.0, 3.0),
        seed: 3,
    };
    let plan = build_plan(&Recipe::CallhomeOv.params(), &pools, &request)?;
    let acoustic = AcousticConfig {
        reverb: true,
        noise: true,
        noise_manifest: Some("in-memory".into()),
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let setup = prepare_setup(&plan, &acoustic, &noise, 16000, &mut rng)?;
    let result = render(&plan, &setup, &SourceCatalog::from_pools(&pools), &loader, 16000, &mut rng)?;

    write_wav(&out, &result.samples, 16000, WavFormat::Pcm16)?;
    let rttm = out.with_extension("rttm");
    write_rttm(&result.manifest, File::create(&rttm).map_err(convsim::Error::from)?)?;
    println!(
        "{} placements, {:.2} s of audio, peak scale {:.3}",
        plan.placements.len(),
        result.samples.len() as f64 / 16000.0,
        result.peak_scale
    );
    println!("wrote {} and {}", out.display(), rttm.display());
    Ok(())
}
