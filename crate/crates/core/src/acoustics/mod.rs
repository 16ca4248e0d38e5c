//! Acoustic augmentation: shoebox room impulse responses, convolution,
//! SNR-controlled noise mixing and gain.

mod config;
mod convolve;
mod mix;
mod rir;

pub use config::{AcousticConfig, SessionScene};
pub use convolve::{convolve, convolve_direct, convolve_fft, DIRECT_MAX_TAPS};
pub use mix::{apply_gain, db_to_amplitude, mean_power, mix_noise, NoiseEvent};
pub use rir::{image_method_rir, ImpulseResponse, RoomSpec, DEFAULT_SPEED_OF_SOUND};
