use rustfft::num_complex::Complex;

use super::resample::resample_slice;
use super::signal::Signal;
use crate::error::{Error, Result};

/// Minimum audio sample rate accepted by the envelope extractors.
pub const MIN_AUDIO_RATE: f64 = 8000.0;

/// Gammatone filter bank description.
#[derive(Clone, Debug, PartialEq)]
pub struct GammatoneBankSpec {
    pub center_freqs: Vec<f64>,
    /// Bandwidth as a multiple of the ERB at each centre frequency.
    pub bandwidth_scale: f64,
    pub order: usize,
    pub exponent: f64,
}

impl Default for GammatoneBankSpec {
    fn default() -> Self {
        Self::erb_spaced(150.0, 4000.0, 28)
    }
}

pub fn erb(freq: f64) -> f64 {
    24.7 * (4.37 * freq / 1000.0 + 1.0)
}

pub fn erb_rate(freq: f64) -> f64 {
    21.4 * (4.37 * freq / 1000.0 + 1.0).log10()
}

pub fn erb_rate_inverse(e: f64) -> f64 {
    (10f64.powf(e / 21.4) - 1.0) * 1000.0 / 4.37
}

impl GammatoneBankSpec {
    /// `bands` centre frequencies equally spaced on the ERB-rate scale.
    pub fn erb_spaced(lo: f64, hi: f64, bands: usize) -> Self {
        let (a, b) = (erb_rate(lo), erb_rate(hi));
        let mut center_freqs: Vec<f64> = (0..bands)
            .map(|i| {
                let t = if bands == 1 { 0.0 } else { i as f64 / (bands - 1) as f64 };
                erb_rate_inverse(a + t * (b - a))
            })
            .collect();
        // Pin the endpoints against round-off in the scale conversion.
        if let Some(first) = center_freqs.first_mut() {
            *first = lo;
        }
        if bands > 1 {
            center_freqs[bands - 1] = hi;
        }
        Self {
            center_freqs,
            bandwidth_scale: 1.5,
            order: 4,
            exponent: 0.6,
        }
    }

    pub fn validate(&self, rate: f64) -> Result<()> {
        if self.center_freqs.is_empty() {
            return Err(Error::InvalidArgument("gammatone bank has no bands".into()));
        }
        if self.center_freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "centre frequencies must be strictly increasing".into(),
            ));
        }
        if self.center_freqs[0] <= 0.0 || *self.center_freqs.last().unwrap() > rate / 2.0 {
            return Err(Error::InvalidArgument(format!(
                "centre frequencies must lie in (0, {}]",
                rate / 2.0
            )));
        }
        if !(self.exponent > 0.0 && self.exponent <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "exponent {} outside (0, 1]",
                self.exponent
            )));
        }
        if self.order == 0 || !(self.bandwidth_scale > 0.0) {
            return Err(Error::InvalidArgument(
                "order and bandwidth scale must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Magnitude envelope of one gammatone subband, scaled so a tone at the
/// centre frequency with amplitude A settles at A.
///
/// The signal is shifted to baseband and passed through `order` identical
/// one-pole low-passes, the complex-baseband form of a gammatone filter.
pub fn subband_envelope(x: &[f64], fc: f64, bandwidth: f64, order: usize, rate: f64) -> Vec<f64> {
    let a = (-2.0 * std::f64::consts::PI * bandwidth / rate).exp();
    let w = -2.0 * std::f64::consts::PI * fc / rate;
    let mut state = vec![Complex::new(0.0, 0.0); order];
    x.iter()
        .enumerate()
        .map(|(n, &v)| {
            let mut y = Complex::from_polar(v, w * n as f64);
            for s in state.iter_mut() {
                *s = *s * a + y * (1.0 - a);
                y = *s;
            }
            2.0 * y.norm()
        })
        .collect()
}

pub(crate) fn check_audio(audio: &Signal, op: &str) -> Result<()> {
    if audio.channels() != 1 {
        return Err(Error::InvalidArgument(format!("{op}: audio must be single-channel")));
    }
    if audio.samples() == 0 {
        return Err(Error::InvalidArgument(format!("{op}: empty audio")));
    }
    if audio.rate() < MIN_AUDIO_RATE {
        return Err(Error::InvalidArgument(format!(
            "{op}: audio rate {} below {MIN_AUDIO_RATE} Hz",
            audio.rate()
        )));
    }
    Ok(())
}

/// Sum of power-law compressed subband envelopes, resampled to `out_rate`.
pub fn gammatone_envelope(audio: &Signal, spec: &GammatoneBankSpec, out_rate: f64) -> Result<Signal> {
    check_audio(audio, "gammatone_envelope")?;
    spec.validate(audio.rate())?;
    let rate = audio.rate();
    let x = audio.channel(0);
    let mut sum = vec![0.0; x.len()];
    for &fc in &spec.center_freqs {
        let env = subband_envelope(x, fc, spec.bandwidth_scale * erb(fc), spec.order, rate);
        for (s, e) in sum.iter_mut().zip(env) {
            *s += e.powf(spec.exponent);
        }
    }
    finish_envelope(sum, rate, out_rate)
}

/// Resamples and clamps to nonnegative: the interpolation kernel has small
/// negative lobes that can dip below zero next to silence.
pub(crate) fn finish_envelope(env: Vec<f64>, rate: f64, out_rate: f64) -> Result<Signal> {
    if !(out_rate > 0.0) || out_rate > rate {
        return Err(Error::InvalidArgument(format!(
            "output rate {out_rate} not in (0, {rate}]"
        )));
    }
    let y = resample_slice(&env, rate, out_rate)
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    Signal::mono(y, out_rate)
}
