use serde::{Deserialize, Serialize};

use crate::dsp::Signal;
use crate::error::{Error, Result};

/// One of the two competing speech streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stream {
    A,
    B,
}

impl Stream {
    /// Class index used by the classifiers: A = 0, B = 1.
    pub fn label(self) -> usize {
        match self {
            Stream::A => 0,
            Stream::B => 1,
        }
    }

    pub fn from_label(label: usize) -> Self {
        if label == 0 {
            Stream::A
        } else {
            Stream::B
        }
    }

    pub fn other(self) -> Self {
        match self {
            Stream::A => Stream::B,
            Stream::B => Stream::A,
        }
    }
}

/// One recording: EEG plus the two presented envelopes, all at the same rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    pub id: String,
    pub eeg: Signal,
    pub env_a: Vec<f64>,
    pub env_b: Vec<f64>,
    pub attended: Stream,
    pub stim_a: String,
    pub stim_b: String,
}

impl Trial {
    pub fn new(
        id: impl Into<String>,
        eeg: Signal,
        env_a: Vec<f64>,
        env_b: Vec<f64>,
        attended: Stream,
        stim_a: impl Into<String>,
        stim_b: impl Into<String>,
    ) -> Result<Self> {
        let id = id.into();
        if env_a.len() != eeg.samples() || env_b.len() != eeg.samples() {
            return Err(Error::Dataset {
                entry: id,
                reason: format!(
                    "stream lengths differ: eeg {}, a {}, b {}",
                    eeg.samples(),
                    env_a.len(),
                    env_b.len()
                ),
            });
        }
        Ok(Self {
            id,
            eeg,
            env_a,
            env_b,
            attended,
            stim_a: stim_a.into(),
            stim_b: stim_b.into(),
        })
    }

    pub fn samples(&self) -> usize {
        self.eeg.samples()
    }

    pub fn rate(&self) -> f64 {
        self.eeg.rate()
    }

    pub fn duration(&self) -> f64 {
        self.eeg.duration()
    }

    pub fn envelope(&self, stream: Stream) -> &[f64] {
        match stream {
            Stream::A => &self.env_a,
            Stream::B => &self.env_b,
        }
    }

    pub fn stimulus(&self, stream: Stream) -> &str {
        match stream {
            Stream::A => &self.stim_a,
            Stream::B => &self.stim_b,
        }
    }

    pub fn attended_stimulus(&self) -> &str {
        self.stimulus(self.attended)
    }

    /// Same trial with one EEG channel removed.
    pub fn without_channel(&self, index: usize) -> Result<Self> {
        Ok(Self {
            eeg: self.eeg.without_channel(index)?,
            ..self.clone()
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Subject {
    pub id: String,
    pub trials: Vec<Trial>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub channel_labels: Vec<String>,
    pub subjects: Vec<Subject>,
}

/// Position of a trial inside a [`Dataset`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrialIndex {
    pub subject: usize,
    pub trial: usize,
}

impl Dataset {
    pub fn n_trials(&self) -> usize {
        self.subjects.iter().map(|s| s.trials.len()).sum()
    }

    pub fn n_channels(&self) -> usize {
        self.channel_labels.len()
    }

    pub fn trial(&self, idx: TrialIndex) -> &Trial {
        &self.subjects[idx.subject].trials[idx.trial]
    }

    pub fn subject_index(&self, id: &str) -> Option<usize> {
        self.subjects.iter().position(|s| s.id == id)
    }

    pub fn indices(&self) -> impl Iterator<Item = TrialIndex> + '_ {
        self.subjects
            .iter()
            .enumerate()
            .flat_map(|(s, subj)| (0..subj.trials.len()).map(move |t| TrialIndex { subject: s, trial: t }))
    }

    /// Copy with one channel removed from every trial.
    pub fn without_channel(&self, index: usize) -> Result<Self> {
        if index >= self.n_channels() {
            return Err(Error::InvalidArgument(format!("channel {index} out of range")));
        }
        let mut labels = self.channel_labels.clone();
        labels.remove(index);
        let subjects = self
            .subjects
            .iter()
            .map(|s| {
                Ok(Subject {
                    id: s.id.clone(),
                    trials: s
                        .trials
                        .iter()
                        .map(|t| t.without_channel(index))
                        .collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            name: self.name.clone(),
            channel_labels: labels,
            subjects,
        })
    }

    /// Applies `f` to every trial, keeping ids and metadata.
    pub fn map_trials(&self, mut f: impl FnMut(&Trial) -> Result<Trial>) -> Result<Self> {
        let subjects = self
            .subjects
            .iter()
            .map(|s| {
                Ok(Subject {
                    id: s.id.clone(),
                    trials: s.trials.iter().map(&mut f).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            name: self.name.clone(),
            channel_labels: self.channel_labels.clone(),
            subjects,
        })
    }
}
