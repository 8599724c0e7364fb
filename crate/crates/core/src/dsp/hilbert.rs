use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::fir::lowpass_zero_phase;
use super::gammatone::{check_audio, finish_envelope};
use super::signal::Signal;
use crate::error::Result;

/// Transition width of the envelope low-pass.
pub const HILBERT_TRANSITION_HZ: f64 = 12.5;

/// Magnitude of the analytic signal, computed with one forward and one
/// inverse FFT.
pub fn analytic_magnitude(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        let gain = if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *v *= gain;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|v| v.norm() / n as f64).collect()
}

pub fn hilbert_envelope(audio: &Signal, lp_cut: f64, out_rate: f64) -> Result<Signal> {
    check_audio(audio, "hilbert_envelope")?;
    let mag = analytic_magnitude(audio.channel(0));
    let smooth = lowpass_zero_phase(&mag, lp_cut, HILBERT_TRANSITION_HZ, audio.rate());
    finish_envelope(smooth, audio.rate(), out_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::gammatone::tests::{am_tone, peak_freq};

    #[test]
    fn zero_in_zero_out() {
        let s = Signal::mono(vec![0.0; 8000], 8000.0).unwrap();
        let e = hilbert_envelope(&s, 50.0, 64.0).unwrap();
        assert!(e.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tone_envelope_equals_amplitude() {
        let s = am_tone(440.0, 4.0, 0.0, 8000.0, 3.0);
        let scaled = Signal::mono(s.data().iter().map(|v| 0.7 * v).collect(), 8000.0).unwrap();
        let e = hilbert_envelope(&scaled, 50.0, 64.0).unwrap();
        for &v in &e.data()[16..176] {
            assert!((v - 0.7).abs() < 0.035, "{v}");
        }
    }

    #[test]
    fn am_tone_tracks_modulation() {
        let s = am_tone(1000.0, 4.0, 0.8, 8000.0, 4.0);
        let e = hilbert_envelope(&s, 50.0, 64.0).unwrap();
        assert!((peak_freq(e.data(), 64.0) - 4.0).abs() < 0.3);
        assert!(e.data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn analytic_magnitude_of_cosine() {
        let x: Vec<f64> = (0..256)
            .map(|i| (2.0 * std::f64::consts::PI * 8.0 * i as f64 / 256.0).cos())
            .collect();
        for v in analytic_magnitude(&x) {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }
}
