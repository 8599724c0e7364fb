//! Dataset model, on-disk format and the synthetic corpus generator.

pub mod array;
pub mod dataset;
pub mod manifest;
pub mod raw;
pub mod synth;

pub use dataset::{Dataset, Stream, Subject, Trial, TrialIndex};
pub use manifest::{
    load_dataset, read_manifest, save_dataset, validate_manifest, write_trial_metadata_csv, DatasetManifest, Violation,
};
pub use raw::{
    preprocess_raw, read_raw_manifest, save_raw, write_raw_manifest, RawManifest, RawStream, RawSubject, RawTrial,
};
pub use synth::{synth_generate, SynthConfig};
