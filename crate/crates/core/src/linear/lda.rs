use nalgebra::{DMatrix, DVector};

use super::ridge::solve_regularized;
use crate::error::{Error, Result};

/// Diagonal loading of the pooled covariance, relative to its mean eigenvalue.
pub const LDA_SHRINKAGE: f64 = 1e-6;

/// Two-class linear discriminant: class 1 when `w·f + bias ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LdaClassifier {
    pub w: Vec<f64>,
    pub bias: f64,
    pub priors: [f64; 2],
}

pub fn lda_fit(features: &[Vec<f64>], labels: &[usize]) -> Result<LdaClassifier> {
    if features.len() != labels.len() {
        return Err(Error::shape("lda_fit", &[features.len()], &[labels.len()]));
    }
    let j = features.first().map_or(0, Vec::len);
    if j == 0 || features.iter().any(|f| f.len() != j) {
        return Err(Error::InvalidArgument(
            "lda features must share a positive length".into(),
        ));
    }
    if let Some(&l) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidArgument(format!("lda label {l} is not 0 or 1")));
    }
    let mut count = [0usize; 2];
    let mut mean = [DVector::zeros(j), DVector::zeros(j)];
    for (f, &l) in features.iter().zip(labels) {
        count[l] += 1;
        mean[l] += DVector::from_column_slice(f);
    }
    if count.contains(&0) {
        return Err(Error::InvalidArgument("lda needs samples from both classes".into()));
    }
    for c in 0..2 {
        mean[c] /= count[c] as f64;
    }
    let mut scatter = DMatrix::zeros(j, j);
    for (f, &l) in features.iter().zip(labels) {
        let d = DVector::from_column_slice(f) - &mean[l];
        scatter += &d * d.transpose();
    }
    let n = features.len();
    let dof = if n > 2 { n - 2 } else { n } as f64;
    let cov = scatter / dof;
    let gamma = (LDA_SHRINKAGE * cov.trace() / j as f64).max(f64::MIN_POSITIVE);
    let delta = &mean[1] - &mean[0];
    let w = solve_regularized(&cov, &delta, gamma)?;
    let priors = [count[0] as f64 / n as f64, count[1] as f64 / n as f64];
    let mid = (&mean[0] + &mean[1]) * 0.5;
    let bias = -w.dot(&mid) + (priors[1] / priors[0]).ln();
    Ok(LdaClassifier {
        w: w.as_slice().to_vec(),
        bias,
        priors,
    })
}

impl LdaClassifier {
    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn score(&self, f: &[f64]) -> f64 {
        self.w.iter().zip(f).map(|(a, b)| a * b).sum::<f64>() + self.bias
    }

    pub fn predict(&self, f: &[f64]) -> usize {
        usize::from(self.score(f) >= 0.0)
    }
}
