//! Filtering, resampling, re-referencing and envelope extraction.

pub mod fir;
pub mod gammatone;
pub mod hilbert;
pub mod preprocess;
pub mod reref;
pub mod resample;
pub mod signal;

pub use fir::{filtfilt, fir_bandpass_zero_phase, lowpass_zero_phase};
pub use gammatone::{gammatone_envelope, GammatoneBankSpec};
pub use hilbert::hilbert_envelope;
pub use preprocess::{preprocess_trial, EnvelopeMethod, Preprocessed, TARGET_RATE};
pub use reref::rereference_and_center;
pub use resample::resample;
pub use signal::Signal;
