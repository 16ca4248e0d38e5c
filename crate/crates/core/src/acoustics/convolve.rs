use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::rir::ImpulseResponse;
use crate::error::{Error, Result};

/// Kernels up to this many taps are convolved directly.
pub const DIRECT_MAX_TAPS: usize = 128;

/// Full linear convolution; output length is `len(signal) + len(taps) - 1`.
pub fn convolve(signal: &[f64], sample_rate: u32, rir: &ImpulseResponse) -> Result<Vec<f64>> {
    if sample_rate != rir.sample_rate {
        return Err(Error::SampleRateMismatch {
            expected: sample_rate,
            actual: rir.sample_rate,
        });
    }
    Ok(if rir.taps.len() > DIRECT_MAX_TAPS {
        convolve_fft(signal, &rir.taps)
    } else {
        convolve_direct(signal, &rir.taps)
    })
}

pub fn convolve_direct(signal: &[f64], kernel: &[f64]) -> Vec<f64> {
    if signal.is_empty() || kernel.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; signal.len() + kernel.len() - 1];
    for (i, &x) in signal.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (o, &h) in out[i..].iter_mut().zip(kernel) {
            *o += x * h;
        }
    }
    out
}

/// Overlap-add FFT convolution.
pub fn convolve_fft(signal: &[f64], kernel: &[f64]) -> Vec<f64> {
    if signal.is_empty() || kernel.is_empty() {
        return Vec::new();
    }
    let out_len = signal.len() + kernel.len() - 1;
    let fft_len = (2 * kernel.len()).max(1024).next_power_of_two();
    let block = fft_len - kernel.len() + 1;

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(fft_len);
    let inverse = planner.plan_fft_inverse(fft_len);

    let mut spectrum: Vec<Complex<f64>> = kernel
        .iter()
        .map(|&h| Complex::new(h, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(fft_len)
        .collect();
    forward.process(&mut spectrum);

    let scale = 1.0 / fft_len as f64;
    let mut out = vec![0.0; out_len];
    let mut buf = vec![Complex::new(0.0, 0.0); fft_len];
    for (b, chunk) in signal.chunks(block).enumerate() {
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for (c, &x) in buf.iter_mut().zip(chunk) {
            c.re = x;
        }
        forward.process(&mut buf);
        for (c, h) in buf.iter_mut().zip(&spectrum) {
            *c *= h;
        }
        inverse.process(&mut buf);
        let start = b * block;
        let valid = chunk.len() + kernel.len() - 1;
        for (o, c) in out[start..start + valid].iter_mut().zip(&buf) {
            *o += c.re * scale;
        }
    }
    out
}
