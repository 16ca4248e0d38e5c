//! Synthetic seed corpora: tone-burst "speech" with word alignments and
//! broadband noise, written as WAV files plus utterance manifests. Useful for
//! demos and tests when no real corpus is at hand.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus_io::{
    group_by_speaker, write_utterance_manifest, write_wav, AudioRef, MemoryLoader, SourceUtterance,
    SpeakerPool, WavFormat, Word,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub num_speakers: usize,
    pub utterances_per_speaker: usize,
    pub sample_rate: u32,
    /// Share of utterances short enough to serve as backchannels (0.3 to 1 s);
    /// the rest last 1.5 to 6 s.
    pub short_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticCorpus {
    fn default() -> Self {
        SyntheticCorpus {
            num_speakers: 8,
            utterances_per_speaker: 20,
            sample_rate: 16000,
            short_fraction: 0.3,
            seed: 0,
        }
    }
}

/// Silence between utterances inside a speaker's file.
const UTTERANCE_SPACING: f64 = 0.25;

struct Utterance {
    samples: Vec<f64>,
    words: Vec<Word>,
}

fn utterance(rng: &mut ChaCha8Rng, f0: f64, duration: f64, fs: f64) -> Utterance {
    let total = (duration * fs).round() as usize;
    let mut samples = vec![0.0; total];
    let mut words = Vec::new();
    let mut pos = (0.02 * fs) as usize;
    while pos < total {
        let len = ((rng.random_range(0.15..0.45) * fs) as usize).min(total - pos);
        if len < (0.05 * fs) as usize {
            break;
        }
        let pitch = f0 * rng.random_range(0.9..1.1);
        let level = rng.random_range(0.1..0.3);
        for k in 0..len {
            let t = k as f64 / fs;
            let envelope = (std::f64::consts::PI * k as f64 / len as f64).sin();
            let voice = (TAU * pitch * t).sin() + 0.5 * (TAU * 2.0 * pitch * t).sin() + 0.25 * (TAU * 3.0 * pitch * t).sin();
            samples[pos + k] = level * envelope * voice / 1.75;
        }
        words.push(Word::new(
            format!("w{}", words.len()),
            pos as f64 / fs,
            (pos + len) as f64 / fs,
        ));
        // mostly short gaps, sometimes a pause long enough to split at
        let gap = if rng.random::<f64>() < 0.1 {
            rng.random_range(0.35..0.6)
        } else {
            rng.random_range(0.03..0.15)
        };
        pos += len + (gap * fs) as usize;
    }
    Utterance { samples, words }
}

impl SyntheticCorpus {
    /// Generates the corpus in memory: one audio file per speaker holding all
    /// of that speaker's utterances, addressed as `spkNN.wav`.
    pub fn generate(&self) -> (Vec<SpeakerPool>, MemoryLoader) {
        let fs = f64::from(self.sample_rate);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut loader = MemoryLoader::new(self.sample_rate);
        let mut utterances = Vec::new();
        for s in 0..self.num_speakers {
            let speaker = format!("spk{s:02}");
            let file = PathBuf::from(format!("{speaker}.wav"));
            let f0 = rng.random_range(90.0..260.0);
            let mut audio = Vec::new();
            for u in 0..self.utterances_per_speaker {
                let duration = if rng.random::<f64>() < self.short_fraction {
                    rng.random_range(0.3..1.0)
                } else {
                    rng.random_range(1.5..6.0)
                };
                let utt = utterance(&mut rng, f0, duration, fs);
                let offset = audio.len();
                let len = utt.samples.len();
                audio.extend_from_slice(&utt.samples);
                audio.resize(audio.len() + (UTTERANCE_SPACING * fs) as usize, 0.0);
                let text = utt.words.iter().map(|w| w.token.as_str()).collect::<Vec<_>>().join(" ");
                utterances.push(SourceUtterance {
                    id: format!("{speaker}_u{u:03}"),
                    speaker_id: speaker.clone(),
                    audio: AudioRef {
                        path: file.clone(),
                        offset: offset as f64 / fs,
                        duration: len as f64 / fs,
                    },
                    sample_rate: self.sample_rate,
                    words: Some(utt.words),
                    text: Some(text),
                });
            }
            loader.insert(file, audio);
        }
        (group_by_speaker(utterances), loader)
    }

    /// Writes `spkNN.wav` files (32-bit float) and `utterances.jsonl` into
    /// `dir`, returning the manifest path. Audio paths in the manifest are
    /// relative to `dir`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let (pools, loader) = self.generate();
        let all: Vec<SourceUtterance> = pools.into_iter().flat_map(|p| p.utterances).collect();
        write_files(dir, &loader, &all, self.sample_rate, "utterances.jsonl")
    }
}

fn write_files(
    dir: &Path,
    loader: &MemoryLoader,
    utterances: &[SourceUtterance],
    sample_rate: u32,
    manifest_name: &str,
) -> Result<PathBuf> {
    let mut files: Vec<&Path> = utterances.iter().map(|u| u.audio.path.as_path()).collect();
    files.sort();
    files.dedup();
    for file in files {
        let samples = loader.samples(file).expect("generated files are registered");
        write_wav(&dir.join(file), samples, sample_rate, WavFormat::Float32)?;
    }
    let manifest = dir.join(manifest_name);
    let out = fs::File::create(&manifest).map_err(|e| Error::io(&manifest, e))?;
    write_utterance_manifest(utterances, std::io::BufWriter::new(out))?;
    Ok(manifest)
}

/// `count` noise recordings of `duration` seconds each: low-passed white
/// noise with a slow amplitude wobble, addressed as `noiseNN.wav`.
pub fn synthetic_noise(count: usize, duration: f64, sample_rate: u32, seed: u64) -> (Vec<SourceUtterance>, MemoryLoader) {
    let fs = f64::from(sample_rate);
    let n = (duration * fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut loader = MemoryLoader::new(sample_rate);
    let mut entries = Vec::with_capacity(count);
    for k in 0..count {
        let smoothing = rng.random_range(0.05..0.9);
        let wobble = rng.random_range(0.1..2.0);
        let mut state = 0.0;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                state += smoothing * (rng.random_range(-1.0..1.0) - state);
                let t = i as f64 / fs;
                0.2 * state * (1.0 + 0.3 * (TAU * wobble * t).sin())
            })
            .collect();
        let path = PathBuf::from(format!("noise{k:02}.wav"));
        loader.insert(path.clone(), samples);
        entries.push(SourceUtterance {
            id: format!("noise{k:02}"),
            speaker_id: "noise".into(),
            audio: AudioRef {
                path,
                offset: 0.0,
                duration: n as f64 / fs,
            },
            sample_rate,
            words: None,
            text: None,
        });
    }
    (entries, loader)
}

/// Writes [`synthetic_noise`] into `dir` with a `noise.jsonl` manifest.
pub fn write_synthetic_noise(dir: &Path, count: usize, duration: f64, sample_rate: u32, seed: u64) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (entries, loader) = synthetic_noise(count, duration, sample_rate, seed);
    write_files(dir, &loader, &entries, sample_rate, "noise.jsonl")
}
