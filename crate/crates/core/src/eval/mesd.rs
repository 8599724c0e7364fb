//! Minimal expected switch duration.
//!
//! A gain controller steps one state up after a correct decision and one
//! state down after a wrong one, over states `1..=K` with reflecting ends.
//! For each decision length `tau` the smallest `K` is chosen whose stationary
//! mass in the comfort region `k_c..=K` reaches the configured confidence; the
//! switch time is `tau` times the expected number of steps from state 1 to
//! `k_c`. MESD is the minimum over `tau`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MesdConfig {
    /// Required stationary probability of the comfort region.
    pub confidence: f64,
    /// Comfort region starts at state `ceil(comfort * K)`.
    pub comfort: f64,
    pub min_states: usize,
    pub max_states: usize,
    /// Number of points on the interpolated `tau` grid.
    pub grid_points: usize,
    /// Results above this many seconds are flagged as censored.
    pub censor_s: f64,
}

impl Default for MesdConfig {
    fn default() -> Self {
        Self {
            confidence: 0.8,
            comfort: 0.65,
            min_states: 5,
            max_states: 1000,
            grid_points: 1000,
            censor_s: 100.0,
        }
    }
}

impl MesdConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.confidence > 0.0
            && self.confidence < 1.0
            && self.comfort > 0.0
            && self.comfort <= 1.0
            && self.min_states >= 2
            && self.max_states >= self.min_states
            && self.grid_points >= 2
            && self.censor_s > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid MESD configuration {self:?}")))
        }
    }

    pub fn comfort_state(&self, k: usize) -> usize {
        ((self.comfort * k as f64).ceil() as usize).clamp(1, k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MesdResult {
    /// `None` when no window length yields a chain that ever settles.
    pub mesd_s: Option<f64>,
    pub tau_opt_s: Option<f64>,
    pub states: Option<usize>,
    /// Undefined or above the censoring threshold.
    pub censored: bool,
}

/// Stationary probability of states `k_c..=k` for up-probability `p`.
pub fn comfort_mass(p: f64, k: usize, k_c: usize) -> f64 {
    if p >= 1.0 {
        return 1.0;
    }
    if p <= 0.0 {
        return if k_c <= 1 { 1.0 } else { 0.0 };
    }
    let q = 1.0 - p;
    if (p - q).abs() < 1e-15 {
        return (k - k_c + 1) as f64 / k as f64;
    }
    // pi_i proportional to r^(i-1); written in whichever ratio is below 1.
    let r = p / q;
    if r > 1.0 {
        let s = 1.0 / r;
        (1.0 - s.powi((k - k_c + 1) as i32)) / (1.0 - s.powi(k as i32))
    } else {
        (r.powi((k_c - 1) as i32) - r.powi(k as i32)) / (1.0 - r.powi(k as i32))
    }
}

/// Smallest state count meeting the confidence, or `None` within the cap.
pub fn min_states(p: f64, cfg: &MesdConfig) -> Option<usize> {
    if p <= 0.5 {
        return None;
    }
    (cfg.min_states..=cfg.max_states).find(|&k| comfort_mass(p, k, cfg.comfort_state(k)) >= cfg.confidence)
}

/// Expected steps from state 1 to `k_c` with a reflecting lower end.
pub fn expected_steps(p: f64, k_c: usize) -> f64 {
    if p <= 0.0 {
        return if k_c <= 1 { 0.0 } else { f64::INFINITY };
    }
    let ratio = (1.0 - p) / p;
    let mut h = 0.0;
    let mut total = 0.0;
    for _ in 1..k_c {
        h = 1.0 / p + ratio * h;
        total += h;
    }
    total
}

/// Piecewise-linear interpolation of `p` at `t` inside the measured range.
fn interpolate(taus: &[f64], ps: &[f64], t: f64) -> f64 {
    let i = taus.partition_point(|&x| x <= t).clamp(1, taus.len() - 1);
    let (t0, t1) = (taus[i - 1], taus[i]);
    let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
    ps[i - 1] + w * (ps[i] - ps[i - 1])
}

/// MESD from `(window length in s, accuracy)` points with strictly increasing lengths.
pub fn mesd(points: &[(f64, f64)], cfg: &MesdConfig) -> Result<MesdResult> {
    cfg.validate()?;
    if points.len() < 2 {
        return Err(Error::InvalidArgument("MESD needs at least two (tau, p) points".into()));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) || points[0].0 <= 0.0 {
        return Err(Error::InvalidArgument(
            "MESD window lengths must be positive and strictly increasing".into(),
        ));
    }
    if points.iter().any(|&(_, p)| !(0.0..=1.0).contains(&p)) {
        return Err(Error::InvalidArgument("MESD accuracies must lie in [0, 1]".into()));
    }
    let taus: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ps: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (lo, hi) = (taus[0], taus[taus.len() - 1]);
    let mut grid: Vec<f64> = (0..cfg.grid_points)
        .map(|i| lo + (hi - lo) * i as f64 / (cfg.grid_points - 1) as f64)
        .collect();
    grid.extend_from_slice(&taus);

    let mut best: Option<(f64, f64, usize)> = None;
    for &tau in &grid {
        let p = interpolate(&taus, &ps, tau);
        let Some(k) = min_states(p, cfg) else { continue };
        let t = tau * expected_steps(p, cfg.comfort_state(k));
        let better = match best {
            None => true,
            Some((bt, btau, _)) => t < bt || (t == bt && tau < btau),
        };
        if better && t.is_finite() {
            best = Some((t, tau, k));
        }
    }
    Ok(match best {
        Some((t, tau, k)) => MesdResult {
            mesd_s: Some(t),
            tau_opt_s: Some(tau),
            states: Some(k),
            censored: t > cfg.censor_s,
        },
        None => MesdResult {
            mesd_s: None,
            tau_opt_s: None,
            states: None,
            censored: true,
        },
    })
}
