//! Windowed-sinc FIR design and zero-phase (forward-backward) filtering.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::signal::Signal;
use crate::error::{Error, Result};

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

fn hamming(n: usize, len: usize) -> f64 {
    if len == 1 {
        return 1.0;
    }
    0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / (len - 1) as f64).cos()
}

/// Rounds to the nearest odd integer (at least 3).
pub fn odd_taps(x: f64) -> usize {
    let n = x.round().max(3.0) as usize;
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

/// Hamming-windowed sinc low-pass with unit DC gain; `cutoff` is the -6 dB point.
pub fn lowpass_taps(cutoff: f64, rate: f64, ntaps: usize) -> Vec<f64> {
    let fc = cutoff / rate;
    let mid = (ntaps - 1) as f64 / 2.0;
    let mut h: Vec<f64> = (0..ntaps)
        .map(|n| 2.0 * fc * sinc(2.0 * fc * (n as f64 - mid)) * hamming(n, ntaps))
        .collect();
    let s: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= s);
    h
}

/// Spectral inversion of the low-pass: unit-impulse minus low-pass.
pub fn highpass_taps(cutoff: f64, rate: f64, ntaps: usize) -> Vec<f64> {
    let mut h = lowpass_taps(cutoff, rate, ntaps);
    h.iter_mut().for_each(|v| *v = -*v);
    h[ntaps / 2] += 1.0;
    h
}

/// Difference of two unit-DC low-passes, so DC gain is exactly zero.
pub fn bandpass_taps(lo: f64, hi: f64, rate: f64, ntaps: usize) -> Vec<f64> {
    let a = lowpass_taps(hi, rate, ntaps);
    let b = lowpass_taps(lo, rate, ntaps);
    a.iter().zip(&b).map(|(x, y)| x - y).collect()
}

/// Linear convolution truncated to the input length (causal FIR output).
pub fn fft_filter(x: &[f64], h: &[f64]) -> Vec<f64> {
    let n = x.len() + h.len() - 1;
    if h.len() <= 64 || x.len() <= 64 {
        let mut y = vec![0.0; x.len()];
        for (i, yi) in y.iter_mut().enumerate() {
            let kmax = i.min(h.len() - 1);
            *yi = (0..=kmax).map(|k| h[k] * x[i - k]).sum();
        }
        return y;
    }
    let size = n.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut a: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    a.resize(size, Complex::new(0.0, 0.0));
    let mut b: Vec<Complex<f64>> = h.iter().map(|&v| Complex::new(v, 0.0)).collect();
    b.resize(size, Complex::new(0.0, 0.0));
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    a[..x.len()].iter().map(|c| c.re * scale).collect()
}

/// Odd (point-symmetric) extension by `pad` samples at both ends.
pub(crate) fn odd_extend(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let pad = pad.min(n.saturating_sub(1));
    let mut out = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        out.push(2.0 * x[0] - x[i]);
    }
    out.extend_from_slice(x);
    for i in 1..=pad {
        out.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }
    out
}

/// Forward-backward FIR filtering: zero phase, squared magnitude response.
pub fn filtfilt(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let pad = h.len().min(x.len() - 1);
    let ext = odd_extend(x, pad);
    let mut y = fft_filter(&ext, h);
    y.reverse();
    let mut y = fft_filter(&y, h);
    y.reverse();
    y[pad..pad + x.len()].to_vec()
}

/// Filter length for a band-pass with low cutoff `lo`: `3 * rate / lo`, rounded to odd.
pub fn bandpass_length(lo: f64, rate: f64) -> usize {
    odd_taps(3.0 * rate / lo)
}

fn apply_rows(signal: &Signal, h: &[f64]) -> Result<Signal> {
    let rows = signal.rows().map(|r| filtfilt(r, h)).collect();
    signal.with_rows(rows, signal.rate())
}

fn check_length(signal: &Signal, ntaps: usize, op: &'static str) -> Result<()> {
    let min = 3 * ntaps + 1;
    if signal.samples() < min {
        return Err(Error::SignalTooShort {
            op,
            min,
            len: signal.samples(),
        });
    }
    Ok(())
}

/// Zero-phase band-pass between `lo` and `hi` Hz.
pub fn fir_bandpass_zero_phase(signal: &Signal, lo: f64, hi: f64) -> Result<Signal> {
    let nyq = signal.rate() / 2.0;
    if !(lo > 0.0 && lo < hi && hi < nyq) {
        return Err(Error::InvalidArgument(format!(
            "band-pass needs 0 < lo < hi < rate/2, got lo={lo}, hi={hi}, rate={}",
            signal.rate()
        )));
    }
    let ntaps = bandpass_length(lo, signal.rate());
    check_length(signal, ntaps, "fir_bandpass_zero_phase")?;
    apply_rows(signal, &bandpass_taps(lo, hi, signal.rate(), ntaps))
}

/// Zero-phase high-pass at `lo` Hz, used when the upper band edge is at or above Nyquist.
pub fn fir_highpass_zero_phase(signal: &Signal, lo: f64) -> Result<Signal> {
    if !(lo > 0.0 && lo < signal.rate() / 2.0) {
        return Err(Error::InvalidArgument(format!("high-pass cutoff {lo} Hz out of range")));
    }
    let ntaps = bandpass_length(lo, signal.rate());
    check_length(signal, ntaps, "fir_highpass_zero_phase")?;
    apply_rows(signal, &highpass_taps(lo, signal.rate(), ntaps))
}

/// Zero-phase low-pass with transition width `width` Hz.
pub fn lowpass_zero_phase(x: &[f64], cutoff: f64, width: f64, rate: f64) -> Vec<f64> {
    let ntaps = odd_taps(3.3 * rate / width).min(odd_taps(x.len() as f64 / 3.0).max(3));
    filtfilt(x, &lowpass_taps(cutoff, rate, ntaps))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Amplitude of the `freq` component over `x[from..to]` by projection.
    pub(crate) fn tone_amplitude(x: &[f64], freq: f64, rate: f64, from: usize, to: usize) -> f64 {
        let (mut c, mut s) = (0.0, 0.0);
        for (i, &v) in x[from..to].iter().enumerate() {
            let ph = 2.0 * std::f64::consts::PI * freq * (from + i) as f64 / rate;
            c += v * ph.cos();
            s += v * ph.sin();
        }
        2.0 * (c * c + s * s).sqrt() / (to - from) as f64
    }

    fn tone(freq: f64, rate: f64, secs: f64) -> Signal {
        let n = (rate * secs) as usize;
        let x = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / rate).sin())
            .collect();
        Signal::mono(x, rate).unwrap()
    }

    #[test]
    fn dc_is_removed() {
        let s = Signal::mono(vec![3.0; 256 * 20], 256.0).unwrap();
        let y = fir_bandpass_zero_phase(&s, 0.5, 32.0).unwrap();
        let max = y.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max < 1e-3 * 3.0, "max {max}");
    }

    #[test]
    fn passband_and_stopband_tones() {
        let rate = 256.0;
        let s = tone(10.0, rate, 24.0);
        let y = fir_bandpass_zero_phase(&s, 0.5, 32.0).unwrap();
        let n = y.samples();
        let a = tone_amplitude(y.data(), 10.0, rate, n / 4, 3 * n / 4);
        assert!((a - 1.0).abs() < 0.05, "10 Hz gain {a}");

        let s = tone(50.0, rate, 24.0);
        let y = fir_bandpass_zero_phase(&s, 0.5, 32.0).unwrap();
        let a = tone_amplitude(y.data(), 50.0, rate, n / 4, 3 * n / 4);
        assert!(20.0 * a.log10() <= -20.0, "50 Hz gain {a}");
    }

    #[test]
    fn passband_ripple_under_one_db() {
        let rate = 256.0;
        for f in [1.0, 2.0, 5.0, 13.0, 25.6] {
            let s = tone(f, rate, 30.0);
            let y = fir_bandpass_zero_phase(&s, 0.5, 32.0).unwrap();
            let n = y.samples();
            let a = tone_amplitude(y.data(), f, rate, n / 4, 3 * n / 4);
            assert!((20.0 * a.log10()).abs() < 1.0, "{f} Hz gain {a}");
        }
    }

    #[test]
    fn too_short_reports_minimum() {
        let s = Signal::mono(vec![0.0; 1000], 256.0).unwrap();
        match fir_bandpass_zero_phase(&s, 0.5, 32.0) {
            Err(Error::SignalTooShort { min, .. }) => assert_eq!(min, 3 * 1537 + 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_phase_has_no_lag() {
        // band-limited noise-like input: a sum of in-band tones
        let rate = 128.0;
        let n = 128 * 30;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / rate;
                (2.0 * std::f64::consts::PI * 3.1 * t).sin()
                    + 0.7 * (2.0 * std::f64::consts::PI * 7.3 * t + 1.0).sin()
                    + 0.4 * (2.0 * std::f64::consts::PI * 11.9 * t + 2.0).cos()
            })
            .collect();
        let s = Signal::mono(x.clone(), rate).unwrap();
        let y = fir_bandpass_zero_phase(&s, 0.5, 32.0).unwrap();
        let best = (-10i64..=10)
            .max_by(|&a, &b| {
                let xc = |lag: i64| -> f64 { (500..n - 500).map(|i| x[i] * y.data()[(i as i64 + lag) as usize]).sum() };
                xc(a).partial_cmp(&xc(b)).unwrap()
            })
            .unwrap();
        assert_eq!(best, 0);
    }

    #[test]
    fn fft_filter_matches_direct() {
        let x: Vec<f64> = (0..300).map(|i| ((i * 7919) % 97) as f64 / 97.0 - 0.5).collect();
        let h: Vec<f64> = (0..81).map(|i| ((i * 31) % 17) as f64 / 17.0).collect();
        let y = fft_filter(&x, &h);
        for i in [0usize, 5, 80, 81, 150, 299] {
            let d: f64 = (0..=i.min(80)).map(|k| h[k] * x[i - k]).sum();
            assert!((y[i] - d).abs() < 1e-9);
        }
    }
}
