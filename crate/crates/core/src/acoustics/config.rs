use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rir::{RoomSpec, DEFAULT_SPEED_OF_SOUND};
use crate::error::{Error, Result};

/// Per-session acoustic augmentation settings. All ranges are inclusive
/// `[low, high]` pairs sampled uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcousticConfig {
    pub reverb: bool,
    pub noise: bool,
    pub room_min: [f64; 3],
    pub room_max: [f64; 3],
    pub absorption: [f64; 2],
    pub max_order: u32,
    pub speed_of_sound: f64,
    pub wall_margin: f64,
    pub min_source_mic_distance: f64,
    pub snr_db: [f64; 2],
    pub gain_db: [f64; 2],
    /// Utterance-style manifest listing noise recordings.
    pub noise_manifest: Option<PathBuf>,
    /// Number of noise events per session.
    pub noise_sources: [usize; 2],
    pub noise_loop: bool,
}

impl Default for AcousticConfig {
    fn default() -> Self {
        AcousticConfig {
            reverb: false,
            noise: false,
            room_min: [3.0, 3.0, 2.5],
            room_max: [8.0, 6.0, 3.5],
            absorption: [0.2, 0.8],
            max_order: 6,
            speed_of_sound: DEFAULT_SPEED_OF_SOUND,
            wall_margin: 0.5,
            min_source_mic_distance: 0.3,
            snr_db: [5.0, 20.0],
            gain_db: [-3.0, 3.0],
            noise_manifest: None,
            noise_sources: [1, 2],
            noise_loop: true,
        }
    }
}

/// Sampled room, microphone and one source position per speaker.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionScene {
    pub room: RoomSpec,
    pub mic: [f64; 3],
    pub sources: Vec<[f64; 3]>,
}

fn check_range(name: &str, [low, high]: [f64; 2]) -> Result<()> {
    if low.is_finite() && high.is_finite() && low <= high {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} range [{low}, {high}] is invalid")))
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, low: f64, high: f64) -> f64 {
    if high > low {
        rng.random_range(low..=high)
    } else {
        low
    }
}

impl AcousticConfig {
    pub fn clean() -> Self {
        AcousticConfig::default()
    }

    pub fn validate(&self) -> Result<()> {
        for axis in 0..3 {
            check_range("room dimension", [self.room_min[axis], self.room_max[axis]])?;
            if self.room_min[axis] <= 2.0 * self.wall_margin {
                return Err(Error::Config(format!(
                    "smallest room extent {} leaves no space inside the {} m wall margin",
                    self.room_min[axis], self.wall_margin
                )));
            }
        }
        check_range("absorption", self.absorption)?;
        if !(self.absorption[0] > 0.0 && self.absorption[1] < 1.0) {
            return Err(Error::Config("absorption must lie in (0, 1)".into()));
        }
        check_range("snr_db", self.snr_db)?;
        check_range("gain_db", self.gain_db)?;
        if self.noise_sources[0] > self.noise_sources[1] {
            return Err(Error::Config("noise_sources range is inverted".into()));
        }
        if !(self.wall_margin >= 0.0 && self.min_source_mic_distance >= 0.0) {
            return Err(Error::Config("placement margins must be non-negative".into()));
        }
        if self.noise && self.noise_manifest.is_none() {
            return Err(Error::Config("noise is enabled but no noise_manifest is set".into()));
        }
        Ok(())
    }

    /// Samples room size and absorption, then the microphone and one source
    /// per speaker uniformly inside the wall margin, redrawing sources that
    /// land too close to the microphone.
    pub fn sample_scene<R: Rng + ?Sized>(&self, num_speakers: usize, rng: &mut R) -> Result<SessionScene> {
        let dimensions = [0, 1, 2].map(|a| uniform(rng, self.room_min[a], self.room_max[a]));
        let room = RoomSpec {
            dimensions,
            absorption: uniform(rng, self.absorption[0], self.absorption[1]),
            max_order: self.max_order,
            speed_of_sound: self.speed_of_sound,
        };
        room.validate()?;
        let margin = self.wall_margin;
        let point = |rng: &mut R| dimensions.map(|d| uniform(rng, margin, d - margin));
        let mic = point(rng);
        let mut sources = Vec::with_capacity(num_speakers);
        for _ in 0..num_speakers {
            let mut tries = 0;
            loop {
                let s = point(rng);
                let d = s.iter().zip(&mic).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                if d >= self.min_source_mic_distance && d > 0.0 {
                    sources.push(s);
                    break;
                }
                tries += 1;
                if tries == 1000 {
                    return Err(Error::Geometry(format!(
                        "no source position at least {} m from the microphone in room {dimensions:?}",
                        self.min_source_mic_distance
                    )));
                }
            }
        }
        Ok(SessionScene { room, mic, sources })
    }

    pub fn sample_snr<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        uniform(rng, self.snr_db[0], self.snr_db[1])
    }

    pub fn sample_noise_count<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(self.noise_sources[0]..=self.noise_sources[1])
    }
}
