use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::lag::{eeg_design, envelope_design};
use super::lda::LdaClassifier;
use super::pearson::pearson_unchecked;
use super::ridge::DEFAULT_LAGS;
use super::stats::CrossStats;
use crate::data::{Stream, Trial};
use crate::dsp::Signal;
use crate::error::{Error, Result};

/// 1.25 s of envelope history at 64 Hz.
pub const DEFAULT_ENVELOPE_LAGS: usize = 80;
/// Diagonal loading as a fraction of the mean covariance eigenvalue.
pub const DEFAULT_SHRINKAGE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CcaConfig {
    pub lags: usize,
    pub envelope_lags: usize,
    pub shrinkage: f64,
}

impl Default for CcaConfig {
    fn default() -> Self {
        Self {
            lags: DEFAULT_LAGS,
            envelope_lags: DEFAULT_ENVELOPE_LAGS,
            shrinkage: DEFAULT_SHRINKAGE,
        }
    }
}

impl CcaConfig {
    /// Upper bound on the component count.
    pub fn max_components(&self) -> usize {
        self.lags.min(self.envelope_lags)
    }

    /// First trial sample with a full envelope history.
    pub fn first_row(&self) -> usize {
        self.envelope_lags - 1
    }

    /// Number of rows where both lag windows fit inside `samples`.
    pub fn valid_rows(&self, samples: usize) -> usize {
        (samples + 2).saturating_sub(self.lags + self.envelope_lags)
    }
}

/// Canonical weight banks, columns ordered by decreasing correlation.
#[derive(Clone, Debug, PartialEq)]
pub struct CcaModel {
    pub wx: DMatrix<f64>,
    pub ws: DMatrix<f64>,
    pub rho: Vec<f64>,
    pub n_channels: usize,
    pub config: CcaConfig,
}

/// Joint statistics of the EEG and envelope lag designs of one trial.
pub fn cca_trial_stats(eeg: &Signal, envelope: &[f64], cfg: &CcaConfig) -> Result<CrossStats> {
    let rows = cfg.valid_rows(eeg.samples());
    if rows < 2 || envelope.len() != eeg.samples() {
        return Err(Error::SignalTooShort {
            op: "cca_trial_stats",
            min: cfg.lags + cfg.envelope_lags,
            len: eeg.samples().min(envelope.len()),
        });
    }
    let first = cfg.first_row();
    Ok(CrossStats::from_designs(
        &eeg_design(eeg, cfg.lags, first, rows),
        &envelope_design(envelope, cfg.envelope_lags, first, rows),
    ))
}

fn load_diagonal(c: &mut DMatrix<f64>, shrinkage: f64) {
    let d = c.nrows();
    let gamma = shrinkage * c.trace() / d as f64;
    for i in 0..d {
        c[(i, i)] += gamma;
    }
}

fn effective_rank(c: &DMatrix<f64>) -> usize {
    let eig = SymmetricEigen::new(c.clone()).eigenvalues;
    let top = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    eig.iter().filter(|&&v| v > 1e-12 * top).count()
}

fn cholesky(c: DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let dim = c.nrows();
    let probe = c.clone();
    Cholesky::new(c).ok_or_else(|| Error::RankDeficient {
        rank: effective_rank(&probe),
        dim,
    })
}

/// Covariance-normalized CCA from pooled statistics.
///
/// With `Cxx = L Lᵀ`, the canonical directions solve the symmetric problem
/// `L⁻¹ Cxs Css⁻¹ Csx L⁻ᵀ u = ρ² u`, `wx = L⁻ᵀ u`.
pub fn cca_solve(stats: &CrossStats, shrinkage: f64) -> Result<(DMatrix<f64>, DMatrix<f64>, Vec<f64>)> {
    if stats.n < 2.0 {
        return Err(Error::InvalidArgument("cca needs at least 2 rows".into()));
    }
    let (mut cxx, cxs, mut css) = stats.centered();
    let n = stats.n;
    cxx /= n;
    css /= n;
    let cxs = cxs / n;
    if cxx.trace() <= 0.0 || css.trace() <= 0.0 {
        return Err(Error::Degenerate("zero-variance design in cca".into()));
    }
    load_diagonal(&mut cxx, shrinkage);
    load_diagonal(&mut css, shrinkage);
    let (dx, ds) = (cxx.nrows(), css.nrows());
    let lx = cholesky(cxx)?;
    let ls = cholesky(css.clone())?;
    let b = ls.solve(&cxs.transpose()); // Css⁻¹ Csx
    let l = lx.l();
    let left = l.solve_lower_triangular(&cxs).expect("cholesky factor is nonsingular");
    let inner = &left * &b; // L⁻¹ Cxs Css⁻¹ Csx
    let mut a = l
        .solve_lower_triangular(&inner.transpose())
        .expect("cholesky factor is nonsingular")
        .transpose();
    a = (&a + &a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..dx).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let k = dx.min(ds);
    let lt = l.transpose();
    let mut wx = DMatrix::zeros(dx, k);
    let mut ws = DMatrix::zeros(ds, k);
    let mut rho = Vec::with_capacity(k);
    for (col, &i) in order.iter().take(k).enumerate() {
        let r = eig.eigenvalues[i].max(0.0).sqrt().min(1.0);
        let u = eig.eigenvectors.column(i).into_owned();
        let w = lt.solve_upper_triangular(&u).expect("cholesky factor is nonsingular");
        let mut v: DVector<f64> = &b * &w;
        let norm = (v.transpose() * &css * &v)[(0, 0)].sqrt();
        if norm > 0.0 {
            v /= norm;
        }
        // Sign convention: positive correlation between the paired components.
        let sign = if (w.transpose() * &cxs * &v)[(0, 0)] < 0.0 {
            -1.0
        } else {
            1.0
        };
        wx.set_column(col, &w);
        ws.set_column(col, &(v * sign));
        rho.push(r);
    }
    Ok((wx, ws, rho))
}

pub fn cca_fit_stats(stats: &CrossStats, n_channels: usize, cfg: &CcaConfig) -> Result<CcaModel> {
    let expected = (n_channels * cfg.lags, cfg.envelope_lags);
    if stats.dims() != expected {
        return Err(Error::shape(
            "cca_fit",
            &[expected.0, expected.1],
            &[stats.dims().0, stats.dims().1],
        ));
    }
    let (mut wx, mut ws, mut rho) = cca_solve(stats, cfg.shrinkage)?;
    let j = cfg.max_components().min(rho.len());
    wx = wx.columns(0, j).into_owned();
    ws = ws.columns(0, j).into_owned();
    rho.truncate(j);
    Ok(CcaModel {
        wx,
        ws,
        rho,
        n_channels,
        config: cfg.clone(),
    })
}

/// Fits on the attended envelopes of `trials`, pooled.
pub fn cca_fit(trials: &[&Trial], cfg: &CcaConfig) -> Result<CcaModel> {
    let first = trials
        .first()
        .ok_or_else(|| Error::InvalidArgument("cca_fit needs training trials".into()))?;
    let stats = trials
        .iter()
        .map(|t| cca_trial_stats(&t.eeg, t.envelope(t.attended), cfg))
        .collect::<Result<Vec<_>>>()?;
    cca_fit_stats(&CrossStats::sum(&stats)?, first.eeg.channels(), cfg)
}

/// Canonical components of one trial, one row per sample with full lag
/// context; `v[k]` belongs to the `k`-th envelope passed in.
#[derive(Clone, Debug)]
pub struct Projection {
    /// Trial sample index of row 0.
    pub first: usize,
    pub u: DMatrix<f64>,
    pub v: Vec<DMatrix<f64>>,
}

impl CcaModel {
    pub fn components(&self) -> usize {
        self.rho.len()
    }

    /// Projects every sample of `eeg` and of each envelope that has full lag
    /// context.
    pub fn project(&self, eeg: &Signal, envelopes: &[&[f64]]) -> Result<Projection> {
        if eeg.channels() != self.n_channels {
            return Err(Error::shape("CcaModel::project", &[self.n_channels], &[eeg.channels()]));
        }
        if let Some(e) = envelopes.iter().find(|e| e.len() != eeg.samples()) {
            return Err(Error::shape("CcaModel::project", &[eeg.samples()], &[e.len()]));
        }
        let cfg = &self.config;
        let rows = cfg.valid_rows(eeg.samples());
        if rows < 2 {
            return Err(Error::SignalTooShort {
                op: "CcaModel::project",
                min: cfg.lags + cfg.envelope_lags,
                len: eeg.samples(),
            });
        }
        let first = cfg.first_row();
        Ok(Projection {
            first,
            u: eeg_design(eeg, cfg.lags, first, rows) * &self.wx,
            v: envelopes
                .iter()
                .map(|e| envelope_design(e, cfg.envelope_lags, first, rows) * &self.ws)
                .collect(),
        })
    }
}

impl Projection {
    /// Component-wise Pearson against envelope `k` over trial samples
    /// `start..end`, clipped to the rows that exist. Returns the coefficients
    /// and a degenerate flag.
    pub fn features(&self, k: usize, start: usize, end: usize, j: usize) -> (Vec<f64>, bool) {
        let lo = start.max(self.first) - self.first;
        let hi = (end.max(self.first) - self.first).min(self.u.nrows());
        if hi < lo + 2 {
            return (vec![0.0; j], true);
        }
        let mut degenerate = false;
        let f = (0..j)
            .map(|c| {
                let a = self.u.column(c);
                let b = self.v[k].column(c);
                let r = pearson_unchecked(&a.as_slice()[lo..hi], &b.as_slice()[lo..hi]);
                degenerate |= r.degenerate;
                r.r
            })
            .collect();
        (f, degenerate)
    }

    /// `features(0, ..) − features(1, ..)`.
    pub fn difference(&self, start: usize, end: usize, j: usize) -> (Vec<f64>, bool) {
        let (a, da) = self.features(0, start, end, j);
        let (b, db) = self.features(1, start, end, j);
        (a.iter().zip(&b).map(|(x, y)| x - y).collect(), da || db)
    }
}

/// First `j` canonical correlations of a standalone window, built only from
/// the window's own samples.
pub fn cca_features(model: &CcaModel, eeg_window: &Signal, envelope: &[f64], j: usize) -> Result<(Vec<f64>, bool)> {
    if j > model.components() {
        return Err(Error::InvalidArgument(format!(
            "requested {j} components of a {}-component model",
            model.components()
        )));
    }
    let p = model.project(eeg_window, &[envelope])?;
    Ok(p.features(0, 0, eeg_window.samples(), j))
}

/// CCA+LDA decision for one window.
#[derive(Clone, Debug, PartialEq)]
pub struct CcaDecision {
    pub choice: Stream,
    pub features: Vec<f64>,
    pub flagged: bool,
}

/// LDA class 1 means stream A is attended.
pub fn stream_of_class(class: usize) -> Stream {
    if class == 1 {
        Stream::A
    } else {
        Stream::B
    }
}

pub fn class_of_stream(s: Stream) -> usize {
    usize::from(s == Stream::A)
}

/// Classifies a standalone window from the difference of its canonical
/// correlations with either envelope; `J` is the LDA dimension.
pub fn cca_classify(
    model: &CcaModel,
    lda: &LdaClassifier,
    eeg_window: &Signal,
    env_a: &[f64],
    env_b: &[f64],
) -> Result<CcaDecision> {
    let j = lda.dim();
    if j > model.components() {
        return Err(Error::shape("cca_classify", &[model.components()], &[j]));
    }
    let p = model.project(eeg_window, &[env_a, env_b])?;
    let (features, flagged) = p.difference(0, eeg_window.samples(), j);
    Ok(CcaDecision {
        choice: stream_of_class(lda.predict(&features)),
        features,
        flagged,
    })
}
