use serde::{Deserialize, Serialize};

use super::fir::{fir_bandpass_zero_phase, fir_highpass_zero_phase};
use super::gammatone::{gammatone_envelope, GammatoneBankSpec, MIN_AUDIO_RATE};
use super::hilbert::hilbert_envelope;
use super::reref::rereference_and_center;
use super::resample::resample;
use super::signal::Signal;
use crate::error::{Error, Result};

/// Analysis rate of every preprocessed stream.
pub const TARGET_RATE: f64 = 64.0;
pub const EEG_BAND: (f64, f64) = (0.5, 32.0);
pub const HILBERT_CUTOFF_HZ: f64 = 50.0;
/// Largest length disagreement resolved by truncation.
pub const MAX_LENGTH_SLACK: usize = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeMethod {
    #[default]
    Gammatone,
    Hilbert,
}

impl std::str::FromStr for EnvelopeMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gammatone" => Ok(Self::Gammatone),
            "hilbert" => Ok(Self::Hilbert),
            _ => Err(Error::InvalidArgument(format!("unknown envelope method {s:?}"))),
        }
    }
}

/// EEG and both envelopes at [`TARGET_RATE`], equal in length.
#[derive(Clone, Debug, PartialEq)]
pub struct Preprocessed {
    pub eeg: Signal,
    pub env_a: Vec<f64>,
    pub env_b: Vec<f64>,
}

pub fn preprocess_eeg(raw: &Signal) -> Result<Signal> {
    let (lo, hi) = EEG_BAND;
    let filtered = if hi < raw.rate() / 2.0 {
        fir_bandpass_zero_phase(raw, lo, hi)?
    } else {
        // Already band-limited below `hi` by the sampling rate.
        fir_highpass_zero_phase(raw, lo)?
    };
    rereference_and_center(&resample(&filtered, TARGET_RATE)?)
}

/// Audio-rate input gets envelope extraction; anything slower is taken to be
/// an envelope already and only resampled.
pub fn stream_envelope(stream: &Signal, method: EnvelopeMethod) -> Result<Vec<f64>> {
    if stream.channels() != 1 {
        return Err(Error::InvalidArgument("audio streams must be single-channel".into()));
    }
    let env = if stream.rate() >= MIN_AUDIO_RATE {
        match method {
            EnvelopeMethod::Gammatone => gammatone_envelope(stream, &GammatoneBankSpec::default(), TARGET_RATE)?,
            EnvelopeMethod::Hilbert => hilbert_envelope(stream, HILBERT_CUTOFF_HZ, TARGET_RATE)?,
        }
    } else {
        resample(stream, TARGET_RATE)?
    };
    Ok(env.channel(0).to_vec())
}

pub fn preprocess_trial(
    raw_eeg: &Signal,
    audio_a: &Signal,
    audio_b: &Signal,
    method: EnvelopeMethod,
) -> Result<Preprocessed> {
    let mut eeg = preprocess_eeg(raw_eeg)?;
    let mut env_a = stream_envelope(audio_a, method)?;
    let mut env_b = stream_envelope(audio_b, method)?;
    let lens = [eeg.samples(), env_a.len(), env_b.len()];
    let (min, max) = (*lens.iter().min().unwrap(), *lens.iter().max().unwrap());
    if max - min > MAX_LENGTH_SLACK {
        return Err(Error::InvalidArgument(format!(
            "stream lengths {lens:?} after preprocessing differ by more than {MAX_LENGTH_SLACK} samples"
        )));
    }
    eeg.truncate(min);
    env_a.truncate(min);
    env_b.truncate(min);
    Ok(Preprocessed { eeg, env_a, env_b })
}
