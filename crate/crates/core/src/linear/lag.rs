use nalgebra::DMatrix;

use crate::dsp::Signal;
use crate::error::{Error, Result};

/// Lagged EEG design matrix, row-major, `T × (N·L)`.
///
/// Row `t` holds `x(t + τ, n)` at column `n·L + τ`, so the EEG at and after
/// `t` predicts the stimulus at `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct LagMatrix {
    data: Vec<f64>,
    rows: usize,
    n_channels: usize,
    lags: usize,
}

impl LagMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.n_channels * self.lags
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn lags(&self) -> usize {
        self.lags
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let c = self.cols();
        &self.data[t * c..(t + 1) * c]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols(), &self.data)
    }

    /// `X g`.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|t| self.row(t).iter().zip(g).map(|(a, b)| a * b).sum())
            .collect()
    }
}

pub fn build_lag_matrix(eeg: &Signal, lags: usize) -> Result<LagMatrix> {
    if lags == 0 {
        return Err(Error::InvalidArgument("lag count must be positive".into()));
    }
    if eeg.samples() <= lags {
        return Err(Error::SignalTooShort {
            op: "build_lag_matrix",
            min: lags + 1,
            len: eeg.samples(),
        });
    }
    let rows = eeg.samples() - lags + 1;
    let n = eeg.channels();
    let mut data = vec![0.0; rows * n * lags];
    for t in 0..rows {
        let row = &mut data[t * n * lags..(t + 1) * n * lags];
        for c in 0..n {
            row[c * lags..(c + 1) * lags].copy_from_slice(&eeg.channel(c)[t..t + lags]);
        }
    }
    Ok(LagMatrix {
        data,
        rows,
        n_channels: n,
        lags,
    })
}

/// Column-major `x` lagged anticausally over rows `first..first + rows`.
pub(crate) fn eeg_design(eeg: &Signal, lags: usize, first: usize, rows: usize) -> DMatrix<f64> {
    let n = eeg.channels();
    DMatrix::from_fn(rows, n * lags, |t, j| eeg.channel(j / lags)[first + t + j % lags])
}

/// Column-major envelope history matrix: row `t` holds `s(t − τ)`.
pub(crate) fn envelope_design(s: &[f64], lags: usize, first: usize, rows: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, lags, |t, j| s[first + t - j])
}
