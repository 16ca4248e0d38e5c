use rand::Rng;

use crate::corpus_io::{AudioLoader, AudioRef};
use crate::error::{Error, Result};

/// A noise recording mixed into a session at a target SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEvent {
    pub noise_ref: AudioRef,
    /// Relative to the speech over the noise's active span.
    pub snr_db: f64,
    pub onset: f64,
    /// Repeat the recording, from a random start, until the session ends.
    pub looped: bool,
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Multiplies every sample by `10^(gain_db / 20)`.
pub fn apply_gain(samples: &mut [f64], gain_db: f64) {
    let scale = db_to_amplitude(gain_db);
    samples.iter_mut().for_each(|s| *s *= scale);
}

pub fn mean_power(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64
}

/// Adds each noise event to a copy of `speech`. The noise over its active
/// span is scaled so that `10 log10(P_speech / P_noise)` equals the event's
/// SNR, with both powers measured over that span. Events starting at or
/// after the end of the speech are skipped.
pub fn mix_noise<R: Rng + ?Sized>(
    speech: &[f64],
    sample_rate: u32,
    events: &[NoiseEvent],
    loader: &dyn AudioLoader,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut out = speech.to_vec();
    for event in events {
        if !event.snr_db.is_finite() {
            return Err(Error::Signal(format!("snr_db must be finite, got {}", event.snr_db)));
        }
        let start = (event.onset.max(0.0) * f64::from(sample_rate)).round() as usize;
        if start >= speech.len() {
            continue;
        }
        let noise = loader.load(&event.noise_ref, sample_rate)?;
        if noise.is_empty() {
            return Err(Error::Signal(format!("noise {} is empty", event.noise_ref.path.display())));
        }
        let available = speech.len() - start;
        let segment: Vec<f64> = if event.looped {
            let phase = rng.random_range(0..noise.len());
            noise.iter().cycle().skip(phase).take(available).copied().collect()
        } else {
            noise[..noise.len().min(available)].to_vec()
        };
        let span = &speech[start..start + segment.len()];
        let speech_power = mean_power(span);
        if speech_power <= 0.0 {
            return Err(Error::Signal(format!(
                "speech has zero power under noise {} at {:.3} s",
                event.noise_ref.path.display(),
                event.onset
            )));
        }
        let noise_power = mean_power(&segment);
        if noise_power <= 0.0 {
            return Err(Error::Signal(format!(
                "noise {} has zero power",
                event.noise_ref.path.display()
            )));
        }
        let scale = (speech_power / (noise_power * 10f64.powf(event.snr_db / 10.0))).sqrt();
        for (o, n) in out[start..].iter_mut().zip(&segment) {
            *o += scale * n;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::MemoryLoader;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::path::PathBuf;

    fn tone(n: usize, f: f64) -> Vec<f64> {
        (0..n).map(|i| (i as f64 * f).sin() * 0.3).collect()
    }

    fn setup(noise: Vec<f64>) -> (MemoryLoader, AudioRef) {
        let mut loader = MemoryLoader::new(16000);
        let duration = noise.len() as f64 / 16000.0;
        loader.insert("n.wav", noise);
        (
            loader,
            AudioRef {
                path: PathBuf::from("n.wav"),
                offset: 0.0,
                duration,
            },
        )
    }

    fn measured_snr(speech: &[f64], mixed: &[f64], start: usize, len: usize) -> f64 {
        let noise: Vec<f64> = mixed[start..start + len]
            .iter()
            .zip(&speech[start..start + len])
            .map(|(m, s)| m - s)
            .collect();
        10.0 * (mean_power(&speech[start..start + len]) / mean_power(&noise)).log10()
    }

    #[test]
    fn gain_values() {
        let mut x = vec![0.5, -0.25, 1.0];
        apply_gain(&mut x, 0.0);
        assert_eq!(x, vec![0.5, -0.25, 1.0]);
        apply_gain(&mut x, -6.0206);
        assert!((x[0] - 0.25).abs() < 1e-5 && (x[2] - 0.5).abs() < 1e-5);
        let mut y = vec![0.1];
        apply_gain(&mut y, 20.0);
        assert!((y[0] - 1.0).abs() < 1e-12);
        assert!((db_to_amplitude(20.0 * 0.5f64.log10()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn snr_is_met_over_partial_span() {
        let speech = tone(32000, 0.05);
        let noise: Vec<f64> = tone(8000, 0.71).iter().map(|v| v + 0.01).collect();
        let (loader, noise_ref) = setup(noise);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for snr in [0.0, 5.0, 10.0, 20.0] {
            let event = NoiseEvent {
                noise_ref: noise_ref.clone(),
                snr_db: snr,
                onset: 0.5,
                looped: false,
            };
            let mixed = mix_noise(&speech, 16000, &[event], &loader, &mut rng).unwrap();
            assert!((measured_snr(&speech, &mixed, 8000, 8000) - snr).abs() < 1e-9);
            assert_eq!(&mixed[..8000], &speech[..8000]);
            assert_eq!(&mixed[16000..], &speech[16000..]);
        }
    }

    #[test]
    fn ten_db_means_a_tenth_of_the_power() {
        let speech = tone(4000, 0.1);
        let (loader, noise_ref) = setup(tone(4000, 0.33));
        let event = NoiseEvent {
            noise_ref,
            snr_db: 10.0,
            onset: 0.0,
            looped: false,
        };
        let mixed = mix_noise(&speech, 16000, &[event], &loader, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let noise: Vec<f64> = mixed.iter().zip(&speech).map(|(m, s)| m - s).collect();
        assert!((mean_power(&noise) / (mean_power(&speech) / 10.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn looped_noise_fills_the_rest() {
        let speech = tone(10000, 0.05);
        let (loader, noise_ref) = setup(tone(1500, 0.9));
        let event = NoiseEvent {
            noise_ref,
            snr_db: 5.0,
            onset: 0.125,
            looped: true,
        };
        let mixed = mix_noise(&speech, 16000, &[event], &loader, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(mixed.len(), speech.len());
        assert!((measured_snr(&speech, &mixed, 2000, 8000) - 5.0).abs() < 1e-9);
        assert!(mixed[9990] != speech[9990]);
    }

    #[test]
    fn zero_power_errors() {
        let (loader, noise_ref) = setup(tone(1000, 0.2));
        let event = NoiseEvent {
            noise_ref,
            snr_db: 0.0,
            onset: 0.0,
            looped: false,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            mix_noise(&[0.0; 2000], 16000, std::slice::from_ref(&event), &loader, &mut rng),
            Err(Error::Signal(_))
        ));
        let (silent, silent_ref) = setup(vec![0.0; 1000]);
        let quiet = NoiseEvent {
            noise_ref: silent_ref,
            ..event
        };
        assert!(mix_noise(&tone(2000, 0.1), 16000, &[quiet], &silent, &mut rng).is_err());
    }
}
