use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::data::Stream;
use crate::error::{Error, Result};

pub const DEFAULT_PERMUTATIONS: usize = 10_000;
pub const MIN_PERMUTATIONS: usize = 1_000;
/// Quantile of Binomial(n, 0.5) that defines the chance level.
pub const CHANCE_QUANTILE: f64 = 0.95;

/// Fraction of decisions equal to their labels.
pub fn accuracy(decisions: &[Stream], labels: &[Stream]) -> Result<f64> {
    if decisions.len() != labels.len() {
        return Err(Error::shape("accuracy", &[labels.len()], &[decisions.len()]));
    }
    if decisions.is_empty() {
        return Err(Error::InvalidArgument("accuracy of zero decisions".into()));
    }
    let hits = decisions.iter().zip(labels).filter(|(d, l)| d == l).count();
    Ok(hits as f64 / decisions.len() as f64)
}

/// Upper chance level for `n` independent binary decisions: the 95th
/// percentile of Binomial(n, 0.5) divided by `n`, i.e. the smallest `k / n`
/// with `P(X <= k) >= 0.95`.
pub fn chance_level(n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let dist = Binomial::new(0.5, n as u64).expect("p = 0.5 is valid");
    // Tiny slack so that a CDF landing exactly on 0.95 is not lost to rounding.
    let k = (0..=n as u64)
        .find(|&k| dist.cdf(k) >= CHANCE_QUANTILE - 1e-12)
        .unwrap_or(n as u64);
    k as f64 / n as f64
}

/// Two-sided paired permutation test on per-subject scores.
///
/// The statistic is `|mean(x - y)|`; the null distribution comes from
/// random sign flips of the paired differences (all `2^n` patterns when
/// that is no more than `n_perm`). Returns `(hits + 1) / (n_perm + 1)` for
/// sampled patterns, the exact fraction otherwise.
pub fn paired_permutation_test(x: &[f64], y: &[f64], n_perm: usize, seed: u64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape("paired_permutation_test", &[x.len()], &[y.len()]));
    }
    if x.is_empty() {
        return Err(Error::InvalidArgument(
            "permutation test needs at least one pair".into(),
        ));
    }
    if n_perm < MIN_PERMUTATIONS {
        return Err(Error::InvalidArgument(format!(
            "permutation test needs at least {MIN_PERMUTATIONS} permutations, got {n_perm}"
        )));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    if d.iter().all(|&v| v == 0.0) {
        return Ok(1.0);
    }
    let n = d.len();
    let observed = d.iter().sum::<f64>().abs();
    // Relative slack keeps sign patterns that reproduce the observed sum exactly.
    let tol = 1e-12 * d.iter().map(|v| v.abs()).sum::<f64>();
    let extreme = |signs: &mut dyn FnMut(usize) -> bool| {
        let s: f64 = (0..n).map(|i| if signs(i) { -d[i] } else { d[i] }).sum();
        s.abs() >= observed - tol
    };
    if n < usize::BITS as usize && (1usize << n) <= n_perm {
        let total = 1usize << n;
        let hits = (0..total).filter(|&mask| extreme(&mut |i| mask >> i & 1 == 1)).count();
        return Ok(hits as f64 / total as f64);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..n_perm {
        if extreme(&mut |_| rng.random::<bool>()) {
            hits += 1;
        }
    }
    Ok((hits + 1) as f64 / (n_perm + 1) as f64)
}

/// Bonferroni adjustment for `m` comparisons, clipped at 1.
pub fn bonferroni(p: &[f64], m: usize) -> Vec<f64> {
    p.iter().map(|&v| (v * m as f64).min(1.0)).collect()
}
