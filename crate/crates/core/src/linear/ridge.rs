use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lag::{build_lag_matrix, eeg_design, envelope_design, LagMatrix};
use super::pearson::{pearson_unchecked, Correlation};
use super::stats::CrossStats;
use crate::data::Trial;
use crate::dsp::Signal;
use crate::error::{Error, Result};

/// 0–250 ms at 64 Hz, both endpoints included.
pub const DEFAULT_LAGS: usize = 17;

/// 10⁻², 10⁻¹, …, 10¹⁰.
pub fn default_lambda_grid() -> Vec<f64> {
    (-2..=10).map(|e| 10f64.powi(e)).collect()
}

/// Backward model `ŝ = X g`.
#[derive(Clone, Debug, PartialEq)]
pub struct RidgeDecoder {
    pub g: Vec<f64>,
    pub lambda: f64,
    pub n_channels: usize,
    pub lags: usize,
}

/// Solves `(A + λI) x = b` by Cholesky, rejecting numerically singular systems.
pub fn solve_regularized(a: &DMatrix<f64>, b: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let d = a.nrows();
    let mut m = a.clone();
    for i in 0..d {
        m[(i, i)] += lambda;
    }
    let scale = (0..d).map(|i| m[(i, i)].abs()).fold(0.0, f64::max);
    let singular = || {
        Error::Singular(format!(
            "normal equations are singular at lambda = {lambda}; use a positive lambda"
        ))
    };
    let chol = Cholesky::new(m).ok_or_else(singular)?;
    let l = chol.l_dirty();
    let min_pivot = (0..d).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-13 * scale) {
        return Err(singular());
    }
    Ok(chol.solve(b))
}

pub fn ridge_fit(x: &LagMatrix, s: &[f64], lambda: f64) -> Result<RidgeDecoder> {
    if x.rows() == 0 {
        return Err(Error::InvalidArgument("empty design matrix".into()));
    }
    if s.len() != x.rows() {
        return Err(Error::shape("ridge_fit", &[x.rows()], &[s.len()]));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    let xm = x.to_matrix();
    let g = solve_regularized(&xm.tr_mul(&xm), &xm.tr_mul(&DVector::from_column_slice(s)), lambda)?;
    Ok(RidgeDecoder {
        g: g.as_slice().to_vec(),
        lambda,
        n_channels: x.n_channels(),
        lags: x.lags(),
    })
}

impl RidgeDecoder {
    /// Reconstructed envelope for every `t` with a full lag window
    /// (`samples − lags + 1` values).
    pub fn reconstruct(&self, eeg: &Signal) -> Result<Vec<f64>> {
        if eeg.channels() != self.n_channels {
            return Err(Error::shape(
                "RidgeDecoder::reconstruct",
                &[self.n_channels],
                &[eeg.channels()],
            ));
        }
        if eeg.samples() < self.lags {
            return Err(Error::SignalTooShort {
                op: "RidgeDecoder::reconstruct",
                min: self.lags,
                len: eeg.samples(),
            });
        }
        let rows = eeg.samples() - self.lags + 1;
        let mut out = vec![0.0; rows];
        for c in 0..self.n_channels {
            let x = eeg.channel(c);
            let g = &self.g[c * self.lags..(c + 1) * self.lags];
            for (t, o) in out.iter_mut().enumerate() {
                *o += g.iter().zip(&x[t..t + self.lags]).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        Ok(out)
    }
}

/// Per-trial ridge statistics over rows `0..=T−L`.
pub fn ridge_trial_stats(eeg: &Signal, envelope: &[f64], lags: usize) -> Result<CrossStats> {
    if eeg.samples() <= lags || envelope.len() != eeg.samples() {
        return Err(Error::SignalTooShort {
            op: "ridge_trial_stats",
            min: lags + 1,
            len: eeg.samples().min(envelope.len()),
        });
    }
    let rows = eeg.samples() - lags + 1;
    Ok(CrossStats::from_designs(
        &eeg_design(eeg, lags, 0, rows),
        &envelope_design(envelope, 1, 0, rows),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RidgeCvConfig {
    pub lambdas: Vec<f64>,
    /// Number of trial groups; `None` leaves one trial out at a time.
    pub folds: Option<usize>,
    pub lags: usize,
}

impl Default for RidgeCvConfig {
    fn default() -> Self {
        Self {
            lambdas: default_lambda_grid(),
            folds: None,
            lags: DEFAULT_LAGS,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RidgeCvResult {
    pub decoder: RidgeDecoder,
    /// Mean held-out reconstruction correlation per grid value.
    pub scores: Vec<f64>,
}

/// Centered decoder from pooled statistics.
fn fit_from_stats(stats: &CrossStats, lambda: f64) -> Result<DVector<f64>> {
    let (cxx, cxy, _) = stats.centered();
    solve_regularized(&cxx, &cxy.column(0).into_owned(), lambda)
}

/// Held-out correlation between `X g` and `s` from the trial's own statistics.
fn held_out_correlation(g: &DVector<f64>, stats: &CrossStats) -> f64 {
    let (cxx, cxy, cyy) = stats.centered();
    let cov = g.dot(&cxy.column(0));
    let var_hat = (g.transpose() * &cxx * g)[(0, 0)];
    let var_s = cyy[(0, 0)];
    if var_hat <= 0.0 || var_s <= 0.0 {
        return 0.0;
    }
    cov / (var_hat * var_s).sqrt()
}

/// Picks λ by cross-validation over trials and refits on all of them.
pub fn ridge_cv_fit_stats(trials: &[CrossStats], n_channels: usize, cfg: &RidgeCvConfig) -> Result<RidgeCvResult> {
    if trials.is_empty() {
        return Err(Error::InvalidArgument("ridge_cv_fit needs training trials".into()));
    }
    if cfg.lambdas.is_empty() || cfg.lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Config("lambda grid must be non-empty and positive".into()));
    }
    let total = CrossStats::sum(trials)?;
    let k = cfg.folds.unwrap_or(trials.len()).clamp(1, trials.len());
    let mut scores = vec![0.0; cfg.lambdas.len()];
    if trials.len() >= 2 && k >= 2 {
        let mut counted = 0usize;
        for fold in 0..k {
            let held: Vec<usize> = (fold..trials.len()).step_by(k).collect();
            let mut train = total.clone();
            for &i in &held {
                train.sub_assign(&trials[i]);
            }
            for (li, &lambda) in cfg.lambdas.iter().enumerate() {
                let g = fit_from_stats(&train, lambda)?;
                scores[li] += held.iter().map(|&i| held_out_correlation(&g, &trials[i])).sum::<f64>();
            }
            counted += held.len();
        }
        scores.iter_mut().for_each(|s| *s /= counted as f64);
    }
    // First maximum, so ties resolve toward weaker regularization.
    let best = scores
        .iter()
        .enumerate()
        .fold(0, |b, (i, &s)| if s > scores[b] { i } else { b });
    let lambda = cfg.lambdas[best];
    let g = fit_from_stats(&total, lambda)?;
    Ok(RidgeCvResult {
        decoder: RidgeDecoder {
            g: g.as_slice().to_vec(),
            lambda,
            n_channels,
            lags: total.dims().0 / n_channels.max(1),
        },
        scores,
    })
}

/// Cross-validated ridge on the attended envelopes of `trials`.
pub fn ridge_cv_fit(trials: &[&Trial], cfg: &RidgeCvConfig) -> Result<RidgeCvResult> {
    let first = trials
        .first()
        .ok_or_else(|| Error::InvalidArgument("ridge_cv_fit needs training trials".into()))?;
    let stats = trials
        .iter()
        .map(|t| ridge_trial_stats(&t.eeg, t.envelope(t.attended), cfg.lags))
        .collect::<Result<Vec<_>>>()?;
    ridge_cv_fit_stats(&stats, first.eeg.channels(), cfg)
}

/// LSR decision for one window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LsrDecision {
    pub choice: crate::data::Stream,
    pub r_a: f64,
    pub r_b: f64,
    /// Set when a correlation was degenerate or `r_a == r_b` forced the tie-break.
    pub flagged: bool,
}

/// Compares a reconstruction against both candidate envelopes.
pub fn lsr_decide(recon: &[f64], env_a: &[f64], env_b: &[f64]) -> Result<LsrDecision> {
    if recon.len() != env_a.len() || recon.len() != env_b.len() {
        return Err(Error::shape(
            "lsr_decide",
            &[recon.len(), recon.len()],
            &[env_a.len(), env_b.len()],
        ));
    }
    if recon.len() < 2 {
        return Err(Error::InvalidArgument("window too short to correlate".into()));
    }
    let a: Correlation = pearson_unchecked(recon, env_a);
    let b: Correlation = pearson_unchecked(recon, env_b);
    let choice = if b.r > a.r {
        crate::data::Stream::B
    } else {
        crate::data::Stream::A
    };
    Ok(LsrDecision {
        choice,
        r_a: a.r,
        r_b: b.r,
        flagged: a.degenerate || b.degenerate || a.r == b.r,
    })
}

/// Decodes a standalone window: the lag matrix is built from the window
/// itself and compared with the envelopes over the same rows.
pub fn lsr_classify(decoder: &RidgeDecoder, eeg_window: &Signal, env_a: &[f64], env_b: &[f64]) -> Result<LsrDecision> {
    if env_a.len() != eeg_window.samples() || env_b.len() != eeg_window.samples() {
        return Err(Error::shape(
            "lsr_classify",
            &[eeg_window.samples(), eeg_window.samples()],
            &[env_a.len(), env_b.len()],
        ));
    }
    let x = build_lag_matrix(eeg_window, decoder.lags)?;
    let recon = x.apply(&decoder.g);
    let n = recon.len();
    lsr_decide(&recon, &env_a[..n], &env_b[..n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_has_thirteen_decades() {
        let g = default_lambda_grid();
        assert_eq!(g.len(), 13);
        assert_eq!(g[0], 1e-2);
        assert_eq!(g[12], 1e10);
    }

    #[test]
    fn orthonormal_columns_give_projection() {
        // Two orthonormal columns in R^4 laid out as a one-lag, two-channel design.
        let h = 0.5;
        let eeg = Signal::new(
            vec![vec![h, h, h, h], vec![h, -h, h, -h]],
            64.0,
            Signal::default_labels(2),
        )
        .unwrap();
        let x = build_lag_matrix(&eeg, 1).unwrap();
        let s = [1.0, 2.0, -1.0, 0.5];
        let d = ridge_fit(&x, &s, 0.0).unwrap();
        let xm = x.to_matrix();
        let xs = xm.tr_mul(&DVector::from_column_slice(&s));
        for (a, b) in d.g.iter().zip(xs.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_at_zero_lambda() {
        let eeg = Signal::new(vec![vec![1.0, 2.0, 3.0]; 2], 64.0, Signal::default_labels(2)).unwrap();
        let x = build_lag_matrix(&eeg, 1).unwrap();
        assert!(matches!(ridge_fit(&x, &[1.0, 0.0, 1.0], 0.0), Err(Error::Singular(_))));
        assert!(ridge_fit(&x, &[1.0, 0.0, 1.0], 1.0).is_ok());
    }

    #[test]
    fn huge_lambda_shrinks() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows = (0..3)
            .map(|_| (0..100).map(|_| rng.random::<f64>() - 0.5).collect())
            .collect();
        let eeg = Signal::new(rows, 64.0, Signal::default_labels(3)).unwrap();
        let x = build_lag_matrix(&eeg, 4).unwrap();
        let s: Vec<f64> = (0..x.rows()).map(|_| rng.random::<f64>() - 0.5).collect();
        let d = ridge_fit(&x, &s, 1e10).unwrap();
        assert!(d.g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-6);
    }

    #[test]
    fn reconstruct_matches_lag_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows = (0..3).map(|_| (0..50).map(|_| rng.random::<f64>()).collect()).collect();
        let eeg = Signal::new(rows, 64.0, Signal::default_labels(3)).unwrap();
        let d = RidgeDecoder {
            g: (0..12).map(|i| i as f64 * 0.1 - 0.4).collect(),
            lambda: 1.0,
            n_channels: 3,
            lags: 4,
        };
        let a = d.reconstruct(&eeg).unwrap();
        let b = build_lag_matrix(&eeg, 4).unwrap().apply(&d.g);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn decide_exact_and_swapped() {
        let recon = [1.0, 3.0, 2.0, 5.0, 4.0];
        let noise = [0.3, -0.1, 0.9, 0.2, -0.5];
        let d = lsr_decide(&recon, &recon, &noise).unwrap();
        assert_eq!(d.choice, crate::data::Stream::A);
        assert!((d.r_a - 1.0).abs() < 1e-12);
        let d = lsr_decide(&recon, &noise, &recon).unwrap();
        assert_eq!(d.choice, crate::data::Stream::B);
        let d = lsr_decide(&[1.0; 5], &recon, &noise).unwrap();
        assert!(d.flagged);
        assert_eq!(d.choice, crate::data::Stream::A);
    }
}
