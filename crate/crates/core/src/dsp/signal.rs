use std::collections::HashSet;

use crate::error::{Error, Result};

/// Multichannel sampled signal, stored channel-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    data: Vec<f64>,
    channels: usize,
    samples: usize,
    rate: f64,
    labels: Vec<String>,
}

impl Signal {
    pub fn new(rows: Vec<Vec<f64>>, rate: f64, labels: Vec<String>) -> Result<Self> {
        let samples = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != samples) {
            return Err(Error::InvalidArgument("signal channels differ in length".into()));
        }
        let channels = rows.len();
        Self::from_flat(rows.concat(), channels, rate, labels)
    }

    pub fn from_flat(data: Vec<f64>, channels: usize, rate: f64, labels: Vec<String>) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample rate must be positive, got {rate}"
            )));
        }
        if channels == 0 || !data.len().is_multiple_of(channels) {
            return Err(Error::InvalidArgument(format!(
                "{} values do not split into {channels} channels",
                data.len()
            )));
        }
        if labels.len() != channels {
            return Err(Error::shape("signal labels", &[channels], &[labels.len()]));
        }
        let unique: HashSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(Error::InvalidArgument("channel labels must be unique".into()));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "signal sample {} of channel {}",
                i % (data.len() / channels),
                i / (data.len() / channels)
            )));
        }
        Ok(Self {
            samples: data.len() / channels,
            data,
            channels,
            rate,
            labels,
        })
    }

    /// Single-channel signal labelled `"0"`.
    pub fn mono(samples: Vec<f64>, rate: f64) -> Result<Self> {
        Self::from_flat(samples, 1, rate, vec!["0".into()])
    }

    /// Channel labels `"0"`, `"1"`, ...
    pub fn default_labels(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn duration(&self) -> f64 {
        self.samples as f64 / self.rate
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        &self.data[i * self.samples..(i + 1) * self.samples]
    }

    pub fn channel_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.samples..(i + 1) * self.samples]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.samples.max(1))
    }

    /// Same labels and rate with new per-channel data.
    pub fn with_rows(&self, rows: Vec<Vec<f64>>, rate: f64) -> Result<Self> {
        Self::new(rows, rate, self.labels.clone())
    }

    /// Samples `[start, end)` of every channel.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.samples {
            return Err(Error::InvalidArgument(format!(
                "slice [{start}, {end}) outside signal of {} samples",
                self.samples
            )));
        }
        let rows = (0..self.channels)
            .map(|c| self.channel(c)[start..end].to_vec())
            .collect();
        self.with_rows(rows, self.rate)
    }

    pub fn truncate(&mut self, len: usize) {
        if len >= self.samples {
            return;
        }
        let rows: Vec<f64> = (0..self.channels)
            .flat_map(|c| self.channel(c)[..len].to_vec())
            .collect();
        self.data = rows;
        self.samples = len;
    }

    pub fn without_channel(&self, index: usize) -> Result<Self> {
        if index >= self.channels {
            return Err(Error::InvalidArgument(format!("channel {index} out of range")));
        }
        if self.channels == 1 {
            return Err(Error::InvalidArgument("cannot remove the last channel".into()));
        }
        let keep: Vec<usize> = (0..self.channels).filter(|&c| c != index).collect();
        let rows = keep.iter().map(|&c| self.channel(c).to_vec()).collect();
        let labels = keep.iter().map(|&c| self.labels[c].clone()).collect();
        Self::new(rows, self.rate, labels)
    }
}
