use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use super::manifest::AudioRef;
use super::wav::read_wav;
use crate::error::{Error, Result};

/// Resolves an [`AudioRef`] to samples. Implementations are shared read-only
/// between worker threads.
pub trait AudioLoader: Sync {
    fn load(&self, audio: &AudioRef, sample_rate: u32) -> Result<Vec<f64>>;
}

fn slice(samples: &[f64], audio: &AudioRef, sample_rate: u32) -> Result<Vec<f64>> {
    let fs = f64::from(sample_rate);
    let start = (audio.offset * fs).round() as usize;
    let len = (audio.duration * fs).round() as usize;
    // Independent rounding of offset and duration may overrun the file by one sample.
    if start + len > samples.len() + 1 || start > samples.len() {
        return Err(Error::Signal(format!(
            "{}: span [{}, {}] s exceeds {} available samples",
            audio.path.display(),
            audio.offset,
            audio.offset + audio.duration,
            samples.len()
        )));
    }
    let mut out = samples[start..(start + len).min(samples.len())].to_vec();
    out.resize(len, 0.0);
    Ok(out)
}

/// Samples and sample rate of a decoded file.
type Decoded = (Vec<f64>, u32);

/// Loads channel 0 of WAV files, resolving relative paths against `root`.
/// Decoded files are cached for the loader's lifetime.
#[derive(Debug, Default)]
pub struct WavLoader {
    root: PathBuf,
    cache: RwLock<HashMap<PathBuf, Arc<Decoded>>>,
}

impl WavLoader {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        WavLoader {
            root: root.into(),
            cache: RwLock::default(),
        }
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.root.join(path)
        }
    }

    fn file(&self, path: &Path) -> Result<Arc<Decoded>> {
        let full = self.resolve(path);
        if let Some(hit) = self.cache.read().unwrap().get(&full) {
            return Ok(Arc::clone(hit));
        }
        let decoded = Arc::new(read_wav(&full, 0)?);
        let mut cache = self.cache.write().unwrap();
        Ok(Arc::clone(cache.entry(full).or_insert(decoded)))
    }
}

impl AudioLoader for WavLoader {
    fn load(&self, audio: &AudioRef, sample_rate: u32) -> Result<Vec<f64>> {
        let file = self.file(&audio.path)?;
        if file.1 != sample_rate {
            return Err(Error::SampleRateMismatch {
                expected: sample_rate,
                actual: file.1,
            });
        }
        slice(&file.0, audio, sample_rate)
    }
}

/// In-memory audio keyed by path, all at one sample rate.
#[derive(Debug, Clone, Default)]
pub struct MemoryLoader {
    sample_rate: u32,
    files: HashMap<PathBuf, Vec<f64>>,
}

impl MemoryLoader {
    pub fn new(sample_rate: u32) -> Self {
        MemoryLoader {
            sample_rate,
            files: HashMap::new(),
        }
    }

    pub fn insert(&mut self, path: impl Into<PathBuf>, samples: Vec<f64>) {
        self.files.insert(path.into(), samples);
    }

    pub fn samples(&self, path: &Path) -> Option<&[f64]> {
        self.files.get(path).map(Vec::as_slice)
    }
}

impl AudioLoader for MemoryLoader {
    fn load(&self, audio: &AudioRef, sample_rate: u32) -> Result<Vec<f64>> {
        if sample_rate != self.sample_rate {
            return Err(Error::SampleRateMismatch {
                expected: sample_rate,
                actual: self.sample_rate,
            });
        }
        let samples = self.files.get(&audio.path).ok_or_else(|| {
            Error::Signal(format!("no audio registered for {}", audio.path.display()))
        })?;
        slice(samples, audio, sample_rate)
    }
}
