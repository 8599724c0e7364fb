use super::signal::Signal;
use crate::error::{Error, Result};

/// Passband edge of the anti-alias filter, as a fraction of the target rate.
pub const PASS_EDGE: f64 = 0.4;
/// Stopband edge (the target Nyquist), as a fraction of the target rate.
pub const STOP_EDGE: f64 = 0.5;

/// Downsamples every channel to `target_rate`.
///
/// Each output sample is a Hamming-windowed sinc evaluated at its fractional
/// input position, which performs anti-alias filtering and interpolation in
/// one step. The kernel is symmetric, so no delay is introduced.
pub fn resample(signal: &Signal, target_rate: f64) -> Result<Signal> {
    if !(target_rate > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target rate must be positive, got {target_rate}"
        )));
    }
    let rate = signal.rate();
    if (target_rate - rate).abs() < 1e-9 {
        return Ok(signal.clone());
    }
    if target_rate > rate {
        return Err(Error::InvalidArgument(format!(
            "resample only downsamples ({rate} Hz -> {target_rate} Hz requested)"
        )));
    }
    let rows = signal.rows().map(|r| resample_slice(r, rate, target_rate)).collect();
    signal.with_rows(rows, target_rate)
}

pub fn output_len(samples: usize, rate: f64, target_rate: f64) -> usize {
    (samples as f64 * target_rate / rate).round() as usize
}

pub fn resample_slice(x: &[f64], rate: f64, target_rate: f64) -> Vec<f64> {
    let n = x.len();
    let n_out = output_len(n, rate, target_rate);
    if n == 0 || n_out == 0 {
        return Vec::new();
    }
    let cutoff = 0.5 * (PASS_EDGE + STOP_EDGE) * target_rate / rate; // cycles per input sample
    let width = (STOP_EDGE - PASS_EDGE) * target_rate / rate;
    let half = (3.3 / width / 2.0).ceil() as i64;
    let step = rate / target_rate;
    let ext_pad = (half as usize + 1).min(n - 1);
    let ext = super::fir::odd_extend(x, ext_pad);
    let pi = std::f64::consts::PI;
    (0..n_out)
        .map(|m| {
            let pos = m as f64 * step;
            let lo = (pos - half as f64).ceil() as i64;
            let hi = (pos + half as f64).floor() as i64;
            let (mut acc, mut wsum) = (0.0, 0.0);
            for k in lo..=hi {
                let idx = k + ext_pad as i64;
                if idx < 0 || idx as usize >= ext.len() {
                    continue;
                }
                let d = pos - k as f64;
                let arg = 2.0 * cutoff * d;
                let s = if arg.abs() < 1e-12 {
                    1.0
                } else {
                    (pi * arg).sin() / (pi * arg)
                };
                let w = 0.54 + 0.46 * (pi * d / (half as f64 + 1.0)).cos();
                let h = s * w;
                acc += h * ext[idx as usize];
                wsum += h;
            }
            acc / wsum
        })
        .collect()
}
