//! Nested choice of the CCA component count `J`.

use super::cca::{cca_fit_stats, class_of_stream, CcaConfig, Projection};
use super::lda::lda_fit;
use super::stats::CrossStats;
use crate::data::Trial;
use crate::error::{Error, Result};
use crate::eval::windows::{make_windows, WindowSpec};

/// Difference features and LDA labels for every window of every trial.
pub fn window_features(
    projections: &[Projection],
    trials: &[&Trial],
    spec: &WindowSpec,
    j: usize,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut feats = Vec::new();
    let mut labels = Vec::new();
    for (p, t) in projections.iter().zip(trials) {
        for (a, b) in make_windows(t.samples(), t.rate(), spec).spans {
            feats.push(p.difference(a, b, j).0);
            labels.push(class_of_stream(t.attended));
        }
    }
    (feats, labels)
}

/// Inner-CV optimum `J_f` for each window length (first maximum of the
/// pooled inner-test accuracy); `None` where no inner fold could be scored.
pub fn select_j(
    trials: &[&Trial],
    stats: &[&CrossStats],
    window_secs: &[f64],
    cfg: &CcaConfig,
    inner_folds: usize,
) -> Result<Vec<Option<usize>>> {
    if trials.len() != stats.len() {
        return Err(Error::shape("select_j", &[trials.len()], &[stats.len()]));
    }
    let k = inner_folds.min(trials.len());
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "select_j needs at least 2 inner folds, got {k} from {} trials",
            trials.len()
        )));
    }
    let n_channels = trials[0].eeg.channels();
    let jmax = cfg.max_components();
    let mut correct = vec![vec![0usize; jmax]; window_secs.len()];
    let mut total = vec![0usize; window_secs.len()];
    let total_stats = CrossStats::sum(stats.iter().copied())?;
    for fold in 0..k {
        let is_test = |i: usize| i % k == fold;
        let mut train_stats = total_stats.clone();
        for (i, s) in stats.iter().enumerate() {
            if is_test(i) {
                train_stats.sub_assign(s);
            }
        }
        let model = cca_fit_stats(&train_stats, n_channels, cfg)?;
        let jm = jmax.min(model.components());
        let projections = trials
            .iter()
            .map(|t| model.project(&t.eeg, &[&t.env_a, &t.env_b]))
            .collect::<Result<Vec<_>>>()?;
        let split = |test: bool| -> (Vec<Projection>, Vec<&Trial>) {
            projections
                .iter()
                .zip(trials)
                .enumerate()
                .filter(|(i, _)| is_test(*i) == test)
                .map(|(_, (p, t))| (p.clone(), *t))
                .unzip()
        };
        let (train_p, train_t) = split(false);
        let (test_p, test_t) = split(true);
        for (wi, &secs) in window_secs.iter().enumerate() {
            let spec = WindowSpec::test(secs);
            let (f_train, l_train) = window_features(&train_p, &train_t, &spec, jm);
            let (f_test, l_test) = window_features(&test_p, &test_t, &spec, jm);
            if f_test.is_empty() || !(l_train.contains(&0) && l_train.contains(&1)) {
                continue;
            }
            total[wi] += f_test.len();
            for j in 1..=jm {
                let cut = |f: &Vec<Vec<f64>>| f.iter().map(|v| v[..j].to_vec()).collect::<Vec<_>>();
                let lda = lda_fit(&cut(&f_train), &l_train)?;
                correct[wi][j - 1] += f_test
                    .iter()
                    .zip(&l_test)
                    .filter(|(f, &l)| lda.predict(&f[..j]) == l)
                    .count();
            }
        }
    }
    Ok(correct
        .iter()
        .zip(&total)
        .map(|(c, &n)| (n > 0).then(|| c.iter().enumerate().fold(0, |b, (i, &v)| if v > c[b] { i } else { b }) + 1))
        .collect())
}

/// Final `J`: per window, the mean of the `J_f` over folds (and subjects)
/// rounded half up; then the minimum over windows.
pub fn combine_j(per_fold: &[Vec<Option<usize>>]) -> Result<usize> {
    let windows = per_fold.iter().map(Vec::len).max().unwrap_or(0);
    (0..windows)
        .filter_map(|w| {
            let vals: Vec<usize> = per_fold.iter().filter_map(|f| f.get(w).copied().flatten()).collect();
            (!vals.is_empty()).then(|| {
                let mean = vals.iter().sum::<usize>() as f64 / vals.len() as f64;
                ((mean + 0.5).floor() as usize).max(1)
            })
        })
        .min()
        .ok_or_else(|| Error::Degenerate("no window length produced a J estimate".into()))
}
