//! Synthetic two-talker corpus from a linear forward model.
//!
//! Each informative channel is `gain * (h * s_att) + leakage * (h * s_unatt) + noise`
//! with a per-(subject, channel) causal kernel `h`; other channels carry noise only.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Stream, Subject, Trial};
use crate::dsp::{lowpass_zero_phase, Signal};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub trials_per_subject: usize,
    pub trial_secs: f64,
    pub n_channels: usize,
    pub rate: f64,
    /// Channels that receive the stimulus response; `None` means all.
    pub informative_channels: Option<Vec<usize>>,
    pub kernel_taps: usize,
    pub gain: f64,
    pub leakage: f64,
    pub noise_std: f64,
    /// Dominant modulation rate of the envelopes.
    pub envelope_cutoff_hz: f64,
    /// Every subject hears the same stimulus pair in trial `k`.
    pub shared_stimuli: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_subjects: 8,
            trials_per_subject: 40,
            trial_secs: 30.0,
            n_channels: 16,
            rate: 64.0,
            informative_channels: None,
            kernel_taps: 16,
            gain: 1.0,
            leakage: 0.2,
            noise_std: 0.5,
            envelope_cutoff_hz: 4.0,
            shared_stimuli: true,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_subjects == 0 || self.trials_per_subject == 0 || self.n_channels == 0 {
            return bad("subject, trial and channel counts must be positive".into());
        }
        if !(self.rate > 0.0 && self.trial_secs > 0.0) {
            return bad("rate and trial length must be positive".into());
        }
        if self.kernel_taps == 0 || self.kernel_taps as f64 > 0.25 * self.rate + 1.0 {
            return bad(format!("kernel of {} taps exceeds 250 ms", self.kernel_taps));
        }
        if self.noise_std < 0.0 || self.gain < 0.0 || self.leakage < 0.0 {
            return bad("gains and noise level must be nonnegative".into());
        }
        if !(self.envelope_cutoff_hz > 0.0 && self.envelope_cutoff_hz < self.rate / 2.0) {
            return bad("envelope cutoff must lie below Nyquist".into());
        }
        if let Some(ch) = &self.informative_channels {
            if let Some(c) = ch.iter().find(|&&c| c >= self.n_channels) {
                return bad(format!("informative channel {c} out of range"));
            }
        }
        Ok(())
    }

    fn is_informative(&self, c: usize) -> bool {
        self.informative_channels.as_ref().is_none_or(|ch| ch.contains(&c))
    }

    fn samples(&self) -> usize {
        (self.trial_secs * self.rate).round() as usize
    }
}

/// Rectified low-passed Gaussian noise of `n` samples, unit variance, a pure
/// function of `(base, stimulus)`.
pub fn speech_like_envelope(base: u64, stimulus: &str, n: usize, cutoff: f64, rate: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed::from_label(base, stimulus));
    let normal = Normal::new(0.0, 1.0).unwrap();
    let pad = (2.0 * rate / cutoff).ceil() as usize;
    let raw: Vec<f64> = (0..n + 2 * pad).map(|_| normal.sample(&mut rng)).collect();
    let smooth = lowpass_zero_phase(&raw, cutoff, cutoff, rate);
    let env: Vec<f64> = smooth[pad..pad + n].iter().map(|v| v.abs()).collect();
    let mean = env.iter().sum::<f64>() / n.max(1) as f64;
    let sd = (env.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt();
    env.into_iter().map(|v| v / sd.max(1e-12)).collect()
}

/// Hann-tapered Gaussian taps with unit norm.
fn response_kernel(rng: &mut ChaCha8Rng, taps: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let h: Vec<f64> = (0..taps)
        .map(|k| {
            let w = (std::f64::consts::PI * (k + 1) as f64 / (taps + 1) as f64)
                .sin()
                .powi(2);
            w * normal.sample(rng)
        })
        .collect();
    let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    h.into_iter().map(|v| v / norm).collect()
}

/// Causal convolution; `s` carries `h.len() - 1` samples of history before
/// the first output.
fn causal(s: &[f64], h: &[f64]) -> Vec<f64> {
    let warm = h.len() - 1;
    (warm..s.len())
        .map(|t| h.iter().enumerate().map(|(k, hk)| hk * s[t - k]).sum())
        .collect()
}

fn f32_round(v: f64) -> f64 {
    v as f32 as f64
}

fn stimulus_ids(cfg: &SynthConfig, subject: usize, trial: usize) -> (String, String) {
    if cfg.shared_stimuli {
        (format!("s{:03}", 2 * trial), format!("s{:03}", 2 * trial + 1))
    } else {
        (
            format!("p{subject:02}-s{:03}", 2 * trial),
            format!("p{subject:02}-s{:03}", 2 * trial + 1),
        )
    }
}

pub fn synth_generate(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let n = cfg.samples();
    let warm = cfg.kernel_taps - 1;
    let labels = Signal::default_labels(cfg.n_channels)
        .into_iter()
        .map(|c| format!("ch{c}"))
        .collect::<Vec<_>>();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut subjects = Vec::with_capacity(cfg.n_subjects);
    for si in 0..cfg.n_subjects {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, si as u64 + 1));
        let kernels: Vec<Vec<f64>> = (0..cfg.n_channels)
            .map(|_| response_kernel(&mut rng, cfg.kernel_taps))
            .collect();
        let mut sides: Vec<Stream> = (0..cfg.trials_per_subject)
            .map(|t| if t % 2 == 0 { Stream::A } else { Stream::B })
            .collect();
        sides.shuffle(&mut rng);
        let mut trials = Vec::with_capacity(cfg.trials_per_subject);
        for (ti, &attended) in sides.iter().enumerate() {
            let (stim_a, stim_b) = stimulus_ids(cfg, si, ti);
            let full_a = speech_like_envelope(cfg.seed, &stim_a, n + warm, cfg.envelope_cutoff_hz, cfg.rate);
            let full_b = speech_like_envelope(cfg.seed, &stim_b, n + warm, cfg.envelope_cutoff_hz, cfg.rate);
            let (att, unatt) = match attended {
                Stream::A => (&full_a, &full_b),
                Stream::B => (&full_b, &full_a),
            };
            let rows: Vec<Vec<f64>> = (0..cfg.n_channels)
                .map(|c| {
                    let mut x = vec![0.0; n];
                    if cfg.is_informative(c) {
                        let ya = causal(att, &kernels[c]);
                        let yu = causal(unatt, &kernels[c]);
                        for t in 0..n {
                            x[t] = cfg.gain * ya[t] + cfg.leakage * yu[t];
                        }
                    }
                    x.iter_mut()
                        .map(|v| f32_round(*v + cfg.noise_std * normal.sample(&mut rng)))
                        .collect()
                })
                .collect();
            let eeg = Signal::new(rows, cfg.rate, labels.clone())?;
            let env_a = full_a[warm..].iter().copied().map(f32_round).collect();
            let env_b = full_b[warm..].iter().copied().map(f32_round).collect();
            trials.push(Trial::new(
                format!("t{ti:03}"),
                eeg,
                env_a,
                env_b,
                attended,
                stim_a,
                stim_b,
            )?);
        }
        subjects.push(Subject {
            id: format!("sub{si:02}"),
            trials,
        });
    }
    Ok(Dataset {
        name: format!("synthetic-{}", cfg.seed),
        channel_labels: labels,
        subjects,
    })
}
