//! `manifest.json` plus one array file per EEG matrix and envelope.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::array::{read_array, write_array};
use super::dataset::{Dataset, Stream, Subject, Trial};
use crate::dsp::Signal;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub name: String,
    pub channel_labels: Vec<String>,
    pub subjects: Vec<SubjectEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectEntry {
    pub id: String,
    pub trials: Vec<TrialEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamEntry {
    pub file: String,
    pub stimulus: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialEntry {
    pub id: String,
    pub eeg_file: String,
    pub a: StreamEntry,
    pub b: StreamEntry,
    pub attended: Stream,
    pub attended_stimulus: String,
    pub unattended_stimulus: String,
    pub sample_rate: f64,
    pub duration: f64,
}

/// A broken invariant found by [`validate_manifest`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub entry: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.entry, self.message)
    }
}

fn quantize(x: &[f64]) -> Vec<f32> {
    x.iter().map(|&v| v as f32).collect()
}

pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut subjects = Vec::new();
    for s in &dataset.subjects {
        let sdir = dir.join(&s.id);
        std::fs::create_dir_all(&sdir).map_err(|e| Error::io(&sdir, e))?;
        let mut trials = Vec::new();
        for t in &s.trials {
            let rel = |suffix: &str| format!("{}/{}_{suffix}.aada", s.id, t.id);
            let (eeg_file, a_file, b_file) = (rel("eeg"), rel("a"), rel("b"));
            write_array(
                &dir.join(&eeg_file),
                &[t.eeg.channels(), t.samples()],
                &quantize(t.eeg.data()),
            )?;
            write_array(&dir.join(&a_file), &[t.samples()], &quantize(&t.env_a))?;
            write_array(&dir.join(&b_file), &[t.samples()], &quantize(&t.env_b))?;
            trials.push(TrialEntry {
                id: t.id.clone(),
                eeg_file,
                a: StreamEntry {
                    file: a_file,
                    stimulus: t.stim_a.clone(),
                },
                b: StreamEntry {
                    file: b_file,
                    stimulus: t.stim_b.clone(),
                },
                attended: t.attended,
                attended_stimulus: t.attended_stimulus().to_string(),
                unattended_stimulus: t.stimulus(t.attended.other()).to_string(),
                sample_rate: t.rate(),
                duration: t.duration(),
            });
        }
        subjects.push(SubjectEntry {
            id: s.id.clone(),
            trials,
        });
    }
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        name: dataset.name.clone(),
        channel_labels: dataset.channel_labels.clone(),
        subjects,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = manifest_path(dir);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path,
        reason: e.to_string(),
    })
}

/// Accepts either the dataset directory or the manifest file itself.
fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

fn dataset_dir(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.to_path_buf()
    } else {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    }
}

/// Reads and checks one trial; every problem found is appended to `out`.
fn scan_trial(dir: &Path, labels: &[String], subject: &str, t: &TrialEntry, out: &mut Vec<Violation>) -> Option<Trial> {
    let entry = format!("{subject}/{}", t.id);
    let before = out.len();
    let mut flag = |message: String| {
        out.push(Violation {
            entry: entry.clone(),
            message,
        })
    };
    if t.stimulus_of(t.attended) != t.attended_stimulus {
        flag(format!(
            "attended stimulus {:?} is not the stimulus of stream {:?}",
            t.attended_stimulus, t.attended
        ));
    }
    if t.stimulus_of(t.attended.other()) != t.unattended_stimulus {
        flag(format!(
            "unattended stimulus {:?} does not match stream ids",
            t.unattended_stimulus
        ));
    }
    if !(t.sample_rate > 0.0) {
        flag(format!("sample rate {} is not positive", t.sample_rate));
    }
    let mut arrays = Vec::new();
    for file in [&t.eeg_file, &t.a.file, &t.b.file] {
        match read_array(&dir.join(file)) {
            Ok(a) => arrays.push(a),
            Err(e) => flag(e.to_string()),
        }
    }
    if arrays.len() < 3 {
        return None;
    }
    let (b_dims, b) = arrays.pop().unwrap();
    let (a_dims, a) = arrays.pop().unwrap();
    let (eeg_dims, eeg) = arrays.pop().unwrap();
    if eeg_dims.len() != 2 || eeg_dims[0] != labels.len() {
        flag(format!("eeg dims {eeg_dims:?} do not match {} channels", labels.len()));
        return None;
    }
    let n = eeg_dims[1];
    if a_dims != [n] || b_dims != [n] {
        flag(format!(
            "envelope dims {a_dims:?}/{b_dims:?} do not match eeg length {n}"
        ));
    }
    if t.sample_rate > 0.0 && (t.duration * t.sample_rate - n as f64).abs() > 0.5 {
        flag(format!(
            "duration {} s disagrees with {n} samples at {} Hz",
            t.duration, t.sample_rate
        ));
    }
    let widen = |v: Vec<f32>| v.into_iter().map(f64::from).collect::<Vec<f64>>();
    let trial = Signal::from_flat(widen(eeg), labels.len(), t.sample_rate, labels.to_vec()).and_then(|signal| {
        Trial::new(
            &t.id,
            signal,
            widen(a),
            widen(b),
            t.attended,
            &t.a.stimulus,
            &t.b.stimulus,
        )
    });
    match trial {
        Ok(trial) if out.len() == before => Some(trial),
        Ok(_) => None,
        Err(e) => {
            out.push(Violation {
                entry,
                message: e.to_string(),
            });
            None
        }
    }
}

impl TrialEntry {
    fn stimulus_of(&self, s: Stream) -> &str {
        match s {
            Stream::A => &self.a.stimulus,
            Stream::B => &self.b.stimulus,
        }
    }
}

fn scan(path: &Path) -> Result<(Vec<Violation>, Dataset)> {
    let manifest = read_manifest(path)?;
    let dir = dataset_dir(path);
    let mut out = Vec::new();
    if manifest.format_version != FORMAT_VERSION {
        out.push(Violation {
            entry: "manifest".into(),
            message: format!("unsupported format version {}", manifest.format_version),
        });
    }
    let unique: HashSet<&String> = manifest.channel_labels.iter().collect();
    if unique.len() != manifest.channel_labels.len() {
        out.push(Violation {
            entry: "manifest".into(),
            message: "duplicate channel labels".into(),
        });
    }
    let mut subject_ids = HashSet::new();
    let mut subjects = Vec::new();
    for s in &manifest.subjects {
        if !subject_ids.insert(&s.id) {
            out.push(Violation {
                entry: s.id.clone(),
                message: "duplicate subject id".into(),
            });
        }
        let mut trial_ids = HashSet::new();
        let mut trials = Vec::new();
        for t in &s.trials {
            if !trial_ids.insert(&t.id) {
                out.push(Violation {
                    entry: format!("{}/{}", s.id, t.id),
                    message: "duplicate trial id".into(),
                });
            }
            if let Some(trial) = scan_trial(&dir, &manifest.channel_labels, &s.id, t, &mut out) {
                trials.push(trial);
            }
        }
        subjects.push(Subject {
            id: s.id.clone(),
            trials,
        });
    }
    let dataset = Dataset {
        name: manifest.name,
        channel_labels: manifest.channel_labels,
        subjects,
    };
    Ok((out, dataset))
}

/// Every broken invariant of the dataset at `path`; empty when valid.
pub fn validate_manifest(path: &Path) -> Result<Vec<Violation>> {
    scan(path).map(|(v, _)| v)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let (violations, dataset) = scan(path)?;
    match violations.into_iter().next() {
        Some(v) => Err(Error::Dataset {
            entry: v.entry,
            reason: v.message,
        }),
        None => Ok(dataset),
    }
}

/// One row per trial: subject, trial, attended side, stimulus ids, rate,
/// duration, channel count.
pub fn write_trial_metadata_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "subject",
        "trial",
        "attended",
        "stimulus_a",
        "stimulus_b",
        "sample_rate",
        "duration_s",
        "n_channels",
    ])?;
    for s in &dataset.subjects {
        for t in &s.trials {
            let side = match t.attended {
                Stream::A => "a",
                Stream::B => "b",
            };
            w.write_record([
                s.id.as_str(),
                t.id.as_str(),
                side,
                t.stim_a.as_str(),
                t.stim_b.as_str(),
                &t.rate().to_string(),
                &t.duration().to_string(),
                &t.eeg.channels().to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
