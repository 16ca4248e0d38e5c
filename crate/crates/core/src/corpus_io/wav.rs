use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavFormat {
    #[default]
    Pcm16,
    Float32,
}

fn wav_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Wav {
            path: path.to_path_buf(),
            source: other,
        },
    }
}

/// Reads one channel of a 16-bit PCM or 32-bit float WAV file.
///
/// PCM samples are scaled by 1/32768.
pub fn read_wav(path: &Path, channel: usize) -> Result<(Vec<f64>, u32)> {
    let reader = WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channel >= channels {
        return Err(Error::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: format!("channel {channel} requested from a {channels}-channel file"),
        });
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .skip(channel)
            .step_by(channels)
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_error(path, e))?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .skip(channel)
            .step_by(channels)
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_error(path, e))?,
        (format, bits) => {
            return Err(Error::UnsupportedEncoding {
                path: path.to_path_buf(),
                detail: format!("{bits}-bit {format:?}"),
            })
        }
    };
    Ok((samples, spec.sample_rate))
}

/// Writes a mono WAV file. Samples are clamped to [-1, 1] before encoding.
pub fn write_wav(path: &Path, samples: &[f64], sample_rate: u32, format: WavFormat) -> Result<()> {
    if let Some(bad) = samples.iter().find(|s| !s.is_finite()) {
        return Err(Error::Signal(format!("non-finite sample {bad} in {}", path.display())));
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: match format {
            WavFormat::Pcm16 => 16,
            WavFormat::Float32 => 32,
        },
        sample_format: match format {
            WavFormat::Pcm16 => SampleFormat::Int,
            WavFormat::Float32 => SampleFormat::Float,
        },
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
    for &s in samples {
        let s = s.clamp(-1.0, 1.0);
        let res = match format {
            WavFormat::Pcm16 => {
                writer.write_sample((s * 32768.0).round().clamp(-32768.0, 32767.0) as i16)
            }
            WavFormat::Float32 => writer.write_sample(s as f32),
        };
        res.map_err(|e| wav_error(path, e))?;
    }
    writer.finalize().map_err(|e| wav_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.wav");
        write_wav(&path, &vec![0.0; 1000], 16000, WavFormat::Pcm16).unwrap();
        let (samples, rate) = read_wav(&path, 0).unwrap();
        assert_eq!(rate, 16000);
        assert_eq!(samples, vec![0.0; 1000]);
    }

    #[test]
    fn pcm16_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.wav");
        let b = dir.path().join("b.wav");
        let codes: Vec<f64> = (i16::MIN..=i16::MAX)
            .step_by(7)
            .map(|v| f64::from(v) / 32768.0)
            .collect();
        write_wav(&a, &codes, 8000, WavFormat::Pcm16).unwrap();
        let (first, _) = read_wav(&a, 0).unwrap();
        write_wav(&b, &first, 8000, WavFormat::Pcm16).unwrap();
        let (second, _) = read_wav(&b, 0).unwrap();
        assert_eq!(first, codes);
        assert_eq!(first, second);
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn clamps_on_write() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.wav");
        write_wav(&path, &[1.5, -2.0], 16000, WavFormat::Float32).unwrap();
        assert_eq!(read_wav(&path, 0).unwrap().0, vec![1.0, -1.0]);
        write_wav(&path, &[1.5], 16000, WavFormat::Pcm16).unwrap();
        let mut r = WavReader::open(&path).unwrap();
        assert_eq!(r.samples::<i16>().next().unwrap().unwrap(), i16::MAX);
    }

    #[test]
    fn eight_bit_is_unsupported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u8.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 8,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        w.write_sample(3i8).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav(&path, 0), Err(Error::UnsupportedEncoding { .. })));
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_wav(Path::new("/nonexistent/x.wav"), 0).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.wav"));
    }

    #[test]
    fn selects_channel() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("st.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&path, spec).unwrap();
        for i in 0..4i16 {
            w.write_sample(i).unwrap();
            w.write_sample(-i).unwrap();
        }
        w.finalize().unwrap();
        let (right, _) = read_wav(&path, 1).unwrap();
        assert_eq!(right, vec![0.0, -1.0 / 32768.0, -2.0 / 32768.0, -3.0 / 32768.0]);
        assert!(read_wav(&path, 2).is_err());
    }
}
