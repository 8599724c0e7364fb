//! Raw recordings awaiting preprocessing.
//!
//! `raw.json` lists trials whose EEG and audio streams each sit in their own
//! array file at their native rate. Streams below the audio threshold are
//! taken to be envelopes already.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::array::{read_array, write_array};
use super::dataset::{Dataset, Stream, Subject, Trial};
use crate::dsp::{preprocess_trial, EnvelopeMethod, Signal};
use crate::error::{Error, Result};

pub const RAW_MANIFEST_FILE: &str = "raw.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawManifest {
    pub name: String,
    pub channel_labels: Vec<String>,
    pub subjects: Vec<RawSubject>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawSubject {
    pub id: String,
    pub trials: Vec<RawTrial>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawStream {
    pub file: String,
    pub rate: f64,
    pub stimulus: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawTrial {
    pub id: String,
    /// `[channels, samples]`.
    pub eeg_file: String,
    pub eeg_rate: f64,
    pub a: RawStream,
    pub b: RawStream,
    pub attended: Stream,
}

pub fn read_raw_manifest(dir: &Path) -> Result<RawManifest> {
    let path = dir.join(RAW_MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path,
        reason: e.to_string(),
    })
}

pub fn write_raw_manifest(dir: &Path, m: &RawManifest) -> Result<()> {
    let path = dir.join(RAW_MANIFEST_FILE);
    let text = serde_json::to_string_pretty(m).map_err(|e| Error::Format {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn load_signal(dir: &Path, file: &str, rate: f64, labels: Vec<String>) -> Result<Signal> {
    let path = dir.join(file);
    let (dims, data) = read_array(&path)?;
    let flat: Vec<f64> = data.into_iter().map(f64::from).collect();
    match dims.as_slice() {
        [_] => Signal::from_flat(flat, 1, rate, vec!["audio".into()]),
        [c, _] if *c == labels.len() => Signal::from_flat(flat, *c, rate, labels),
        _ => Err(Error::Format {
            path,
            reason: format!("unexpected array shape {dims:?}"),
        }),
    }
}

/// Loads every raw trial and runs the standard preprocessing chain on it.
pub fn preprocess_raw(dir: &Path, method: EnvelopeMethod) -> Result<Dataset> {
    let m = read_raw_manifest(dir)?;
    let mut subjects = Vec::with_capacity(m.subjects.len());
    for s in &m.subjects {
        let mut trials = Vec::with_capacity(s.trials.len());
        for t in &s.trials {
            let eeg = load_signal(dir, &t.eeg_file, t.eeg_rate, m.channel_labels.clone())?;
            let a = load_signal(dir, &t.a.file, t.a.rate, Vec::new())?;
            let b = load_signal(dir, &t.b.file, t.b.rate, Vec::new())?;
            let p = preprocess_trial(&eeg, &a, &b, method).map_err(|e| Error::Dataset {
                entry: format!("{}/{}", s.id, t.id),
                reason: e.to_string(),
            })?;
            trials.push(Trial::new(
                t.id.clone(),
                p.eeg,
                p.env_a,
                p.env_b,
                t.attended,
                t.a.stimulus.clone(),
                t.b.stimulus.clone(),
            )?);
        }
        subjects.push(Subject {
            id: s.id.clone(),
            trials,
        });
    }
    Ok(Dataset {
        name: m.name,
        channel_labels: m.channel_labels,
        subjects,
    })
}

/// Writes a dataset in raw layout with the given rates; used to stage
/// recordings and in tests.
pub fn save_raw(dataset: &Dataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let q = |x: &[f64]| x.iter().map(|&v| v as f32).collect::<Vec<f32>>();
    let mut subjects = Vec::new();
    for s in &dataset.subjects {
        let mut trials = Vec::new();
        for t in &s.trials {
            let name = |k: &str| format!("{}_{}_{k}.aada", s.id, t.id);
            write_array(
                &dir.join(name("eeg")),
                &[t.eeg.channels(), t.samples()],
                &q(t.eeg.data()),
            )?;
            write_array(&dir.join(name("a")), &[t.samples()], &q(&t.env_a))?;
            write_array(&dir.join(name("b")), &[t.samples()], &q(&t.env_b))?;
            let stream = |k: &str, stim: &str| RawStream {
                file: name(k),
                rate: t.rate(),
                stimulus: stim.into(),
            };
            trials.push(RawTrial {
                id: t.id.clone(),
                eeg_file: name("eeg"),
                eeg_rate: t.rate(),
                a: stream("a", &t.stim_a),
                b: stream("b", &t.stim_b),
                attended: t.attended,
            });
        }
        subjects.push(RawSubject {
            id: s.id.clone(),
            trials,
        });
    }
    write_raw_manifest(
        dir,
        &RawManifest {
            name: dataset.name.clone(),
            channel_labels: dataset.channel_labels.clone(),
            subjects,
        },
    )
}
