//! Turns a conversation plan into a waveform and its final session manifest.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use crate::acoustics::{
    apply_gain, convolve, image_method_rir, mix_noise, AcousticConfig, ImpulseResponse, NoiseEvent,
};
use crate::corpus_io::{AudioLoader, SessionManifest, SourceUtterance, SpeakerPool};
use crate::error::{Error, Result};
use crate::planner::ConversationPlan;

/// Mixtures are rescaled so that no sample exceeds this magnitude.
pub const PEAK_LIMIT: f64 = 0.99;

/// Seed utterances by id.
#[derive(Debug, Clone, Default)]
pub struct SourceCatalog {
    utterances: HashMap<String, SourceUtterance>,
}

impl SourceCatalog {
    pub fn from_pools(pools: &[SpeakerPool]) -> Self {
        SourceCatalog {
            utterances: pools
                .iter()
                .flat_map(|p| &p.utterances)
                .map(|u| (u.id.clone(), u.clone()))
                .collect(),
        }
    }

    pub fn get(&self, id: &str) -> Option<&SourceUtterance> {
        self.utterances.get(id)
    }

    pub fn text_of(&self, id: &str) -> Option<String> {
        let utt = self.get(id)?;
        utt.text.clone().or_else(|| {
            utt.words
                .as_ref()
                .map(|w| w.iter().map(|w| w.token.as_str()).collect::<Vec<_>>().join(" "))
        })
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }
}

/// The acoustic realization of one session: an impulse response per speaker
/// (empty when dry) and the noise events to add.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RenderSetup {
    pub rirs: BTreeMap<String, ImpulseResponse>,
    pub noise: Vec<NoiseEvent>,
}

impl RenderSetup {
    pub fn dry() -> Self {
        RenderSetup::default()
    }

    fn tail_samples(&self) -> usize {
        self.rirs.values().map(|r| r.taps.len().saturating_sub(1)).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderResult {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub manifest: SessionManifest,
    /// Factor applied to the whole mixture to keep its peak at or below
    /// [`PEAK_LIMIT`]; 1 when no rescaling was needed.
    pub peak_scale: f64,
}

/// Samples the room, positions and noise events for `plan` from `config`.
/// Speakers receive source positions in sorted id order.
pub fn prepare_setup<R: Rng + ?Sized>(
    plan: &ConversationPlan,
    config: &AcousticConfig,
    noise_pool: &[SourceUtterance],
    sample_rate: u32,
    rng: &mut R,
) -> Result<RenderSetup> {
    let mut setup = RenderSetup::default();
    if config.reverb {
        let speakers: Vec<&str> = {
            let mut ids: Vec<&str> = plan.placements.iter().map(|p| p.speaker_id.as_str()).collect();
            ids.sort_unstable();
            ids.dedup();
            ids
        };
        let scene = config.sample_scene(speakers.len(), rng)?;
        for (speaker, source) in speakers.iter().zip(&scene.sources) {
            let rir = image_method_rir(&scene.room, *source, scene.mic, sample_rate)?;
            setup.rirs.insert(speaker.to_string(), rir);
        }
    }
    if config.noise {
        if noise_pool.is_empty() {
            return Err(Error::Config("noise is enabled but the noise pool is empty".into()));
        }
        let session = plan.end();
        for _ in 0..config.sample_noise_count(rng) {
            let noise = &noise_pool[rng.random_range(0..noise_pool.len())];
            let onset = if config.noise_loop {
                0.0
            } else {
                let room = (session - noise.duration()).max(0.0);
                rng.random_range(0.0..=room)
            };
            setup.noise.push(NoiseEvent {
                noise_ref: noise.audio.clone(),
                snr_db: config.sample_snr(rng),
                onset,
                looped: config.noise_loop,
            });
        }
    }
    Ok(setup)
}

/// Renders `plan`: each placement is loaded, scaled by its gain, convolved
/// with its speaker's impulse response if there is one, and added at sample
/// `round(onset * fs)`. Noise is then mixed in and the result rescaled if
/// its peak exceeds [`PEAK_LIMIT`]. The manifest keeps the plan's dry
/// onsets and durations; its duration is the rendered length.
pub fn render<R: Rng + ?Sized>(
    plan: &ConversationPlan,
    setup: &RenderSetup,
    catalog: &SourceCatalog,
    loader: &dyn AudioLoader,
    sample_rate: u32,
    rng: &mut R,
) -> Result<RenderResult> {
    let fs = f64::from(sample_rate);
    let mut len = (plan.end() * fs).ceil() as usize + setup.tail_samples();
    let mut contributions = Vec::with_capacity(plan.placements.len());
    for placement in &plan.placements {
        let source = catalog.get(&placement.source_id).ok_or_else(|| Error::MissingSource {
            source_id: placement.source_id.clone(),
            message: "not in the source catalog".into(),
        })?;
        if source.sample_rate != sample_rate {
            return Err(Error::SampleRateMismatch {
                expected: sample_rate,
                actual: source.sample_rate,
            });
        }
        let mut samples = loader.load(&source.audio, sample_rate)?;
        apply_gain(&mut samples, placement.gain_db);
        if let Some(rir) = setup.rirs.get(&placement.speaker_id) {
            samples = convolve(&samples, sample_rate, rir)?;
        }
        let start = (placement.onset * fs).round() as usize;
        len = len.max(start + samples.len());
        contributions.push((start, samples));
    }
    let mut mix = vec![0.0; len];
    for (start, samples) in contributions {
        for (o, s) in mix[start..].iter_mut().zip(&samples) {
            *o += s;
        }
    }
    if !setup.noise.is_empty() {
        mix = mix_noise(&mix, sample_rate, &setup.noise, loader, rng)?;
    }
    let peak = mix.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let peak_scale = if peak > PEAK_LIMIT { PEAK_LIMIT / peak } else { 1.0 };
    if peak_scale != 1.0 {
        mix.iter_mut().for_each(|s| *s *= peak_scale);
    }
    let mut manifest = plan.to_manifest(sample_rate, |id| catalog.text_of(id));
    manifest.duration = manifest.duration.max(mix.len() as f64 / fs);
    Ok(RenderResult {
        samples: mix,
        sample_rate,
        manifest,
        peak_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::{AudioRef, MemoryLoader};
    use crate::planner::{PlacedUtterance, PlanFallbacks};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::path::PathBuf;

    fn utterance(id: &str, speaker: &str, n: usize) -> SourceUtterance {
        SourceUtterance {
            id: id.into(),
            speaker_id: speaker.into(),
            audio: AudioRef {
                path: PathBuf::from(format!("{id}.wav")),
                offset: 0.0,
                duration: n as f64 / 16000.0,
            },
            sample_rate: 16000,
            words: None,
            text: Some(format!("text of {id}")),
        }
    }

    fn placement(id: &str, speaker: &str, onset: f64, n: usize) -> PlacedUtterance {
        PlacedUtterance {
            source_id: id.into(),
            speaker_id: speaker.into(),
            onset,
            duration: n as f64 / 16000.0,
            transition: None,
            gain_db: 0.0,
            anchor: None,
        }
    }

    fn plan(placements: Vec<PlacedUtterance>) -> ConversationPlan {
        ConversationPlan {
            session_id: "s".into(),
            num_speakers: 2,
            target_duration: 1.0,
            seed: 0,
            placements,
            fallbacks: PlanFallbacks::default(),
        }
    }

    fn signal(n: usize, f: f64) -> Vec<f64> {
        (0..n).map(|i| 0.2 * (i as f64 * f).sin()).collect()
    }

    fn fixture() -> (SourceCatalog, MemoryLoader) {
        let mut loader = MemoryLoader::new(16000);
        loader.insert("a.wav", signal(1600, 0.1));
        loader.insert("b.wav", signal(800, 0.3));
        let catalog = SourceCatalog::from_pools(&[SpeakerPool {
            speaker_id: "x".into(),
            utterances: vec![utterance("a", "A", 1600), utterance("b", "B", 800)],
        }]);
        (catalog, loader)
    }

    #[test]
    fn single_placement_is_identity() {
        let (catalog, loader) = fixture();
        let p = plan(vec![placement("a", "A", 0.0, 1600)]);
        let out = render(&p, &RenderSetup::dry(), &catalog, &loader, 16000, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(out.samples, signal(1600, 0.1));
        assert_eq!(out.peak_scale, 1.0);
        assert_eq!(out.manifest.supervisions[0].text.as_deref(), Some("text of a"));
    }

    #[test]
    fn overlapping_copies_add() {
        let (catalog, loader) = fixture();
        let p = plan(vec![placement("a", "A", 0.0, 1600), placement("a", "B", 0.0, 1600)]);
        let out = render(&p, &RenderSetup::dry(), &catalog, &loader, 16000, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for (o, s) in out.samples.iter().zip(signal(1600, 0.1)) {
            assert_eq!(*o, 2.0 * s);
        }
    }

    #[test]
    fn offsets_are_sample_accurate() {
        let (catalog, loader) = fixture();
        let p = plan(vec![placement("a", "A", 0.0, 1600), placement("b", "B", 0.125, 800)]);
        let out = render(&p, &RenderSetup::dry(), &catalog, &loader, 16000, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(out.samples.len(), 2800);
        let b = signal(800, 0.3);
        assert_eq!(out.samples[2000..], b[..]);
        assert_eq!(out.samples[1600..2000], vec![0.0; 400][..]);
    }

    #[test]
    fn loud_mixtures_are_rescaled() {
        let mut loader = MemoryLoader::new(16000);
        loader.insert("a.wav", vec![0.5; 100]);
        let catalog = SourceCatalog::from_pools(&[SpeakerPool {
            speaker_id: "A".into(),
            utterances: vec![utterance("a", "A", 100)],
        }]);
        let mut loud = placement("a", "A", 0.0, 100);
        loud.gain_db = 20.0 * 4f64.log10();
        let out = render(&plan(vec![loud]), &RenderSetup::dry(), &catalog, &loader, 16000, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!((out.peak_scale - 0.99 / 2.0).abs() < 1e-12);
        assert!(out.samples.iter().all(|s| (s - 0.99).abs() < 1e-12));
    }

    #[test]
    fn reverb_extends_length_not_supervisions() {
        let (catalog, loader) = fixture();
        let p = plan(vec![placement("a", "A", 0.0, 1600)]);
        let mut setup = RenderSetup::dry();
        setup.rirs.insert(
            "A".into(),
            ImpulseResponse {
                sample_rate: 16000,
                taps: vec![0.0, 0.0, 0.5, 0.0, 0.25],
            },
        );
        let out = render(&p, &setup, &catalog, &loader, 16000, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(out.samples.len(), 1604);
        assert_eq!(out.manifest.supervisions[0].duration, 0.1);
        let dry = signal(1600, 0.1);
        assert!((out.samples[2] - 0.5 * dry[0]).abs() < 1e-15);
        assert!((out.samples[10] - (0.5 * dry[8] + 0.25 * dry[6])).abs() < 1e-15);
    }

    #[test]
    fn missing_source_is_an_error() {
        let (catalog, loader) = fixture();
        let p = plan(vec![placement("zzz", "A", 0.0, 10)]);
        assert!(matches!(
            render(&p, &RenderSetup::dry(), &catalog, &loader, 16000, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::MissingSource { .. })
        ));
    }

    #[test]
    fn prepared_setup_follows_switches() {
        let p = plan(vec![placement("a", "A", 0.0, 1600), placement("b", "B", 0.125, 800)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dry = prepare_setup(&p, &AcousticConfig::clean(), &[], 16000, &mut rng).unwrap();
        assert_eq!(dry, RenderSetup::dry());
        let config = AcousticConfig {
            reverb: true,
            noise: true,
            noise_manifest: Some("noise.jsonl".into()),
            ..Default::default()
        };
        let noise = [utterance("n", "noise", 400)];
        let setup = prepare_setup(&p, &config, &noise, 16000, &mut rng).unwrap();
        assert_eq!(setup.rirs.keys().collect::<Vec<_>>(), ["A", "B"]);
        assert!((1..=2).contains(&setup.noise.len()));
        assert!(prepare_setup(&p, &config, &[], 16000, &mut rng).is_err());
    }
}
