//! Mixes noise into speech at a target SNR and measures the result.

use convsim::acoustics::{mean_power, mix_noise, NoiseEvent};
use convsim::corpus_io::AudioRef;
use convsim::synthetic::{synthetic_noise, SyntheticCorpus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> convsim::Result<()> {
    let (pools, speech_audio) = SyntheticCorpus::default().generate();
    let utt = &pools[0].utterances[0];
    let speech = convsim::corpus_io::AudioLoader::load(&speech_audio, &utt.audio, 16000)?;
    let (noise, loader) = synthetic_noise(1, 10.0, 16000, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for snr_db in [0.0, 10.0, 20.0] {
        let event = NoiseEvent {
            noise_ref: AudioRef {
                duration: utt.duration().min(noise[0].duration()),
                ..noise[0].audio.clone()
            },
            snr_db,
            onset: 0.0,
            looped: false,
        };
        let mixed = mix_noise(&speech, 16000, &[event], &loader, &mut rng)?;
        let added: Vec<f64> = mixed.iter().zip(&speech).map(|(m, s)| m - s).collect();
        let measured = 10.0 * (mean_power(&speech) / mean_power(&added)).log10();
        println!("requested {snr_db:>4.1} dB, measured {measured:.6} dB");
    }
    Ok(())
}
