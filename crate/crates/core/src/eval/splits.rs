use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Stream, TrialIndex};
use crate::error::{Error, Result};
use crate::seed::derive;

pub const DEFAULT_FOLDS: usize = 8;

/// Identity of a trial as far as fold planning is concerned.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrialRef {
    pub subject: String,
    pub trial: String,
    pub attended: Stream,
    pub attended_stimulus: String,
    /// Position in the dataset this reference was taken from.
    pub index: TrialIndex,
}

/// Trial references grouped by subject, in dataset order.
pub fn trial_refs(ds: &Dataset) -> Vec<Vec<TrialRef>> {
    ds.subjects
        .iter()
        .enumerate()
        .map(|(si, s)| {
            s.trials
                .iter()
                .enumerate()
                .map(|(ti, t)| TrialRef {
                    subject: s.id.clone(),
                    trial: t.id.clone(),
                    attended: t.attended,
                    attended_stimulus: t.attended_stimulus().to_string(),
                    index: TrialIndex { subject: si, trial: ti },
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub fold: usize,
    pub train: Vec<TrialRef>,
    pub val: Vec<TrialRef>,
    pub test: Vec<TrialRef>,
}

impl FoldPlan {
    /// Training and validation trials together.
    pub fn fit_set(&self) -> Vec<TrialRef> {
        self.train.iter().chain(&self.val).cloned().collect()
    }
}

/// Deals trials into `folds` groups of near-equal size. Trials are shuffled,
/// then ordered by attended side so every fold gets a mix of both labels.
fn deal(trials: &[TrialRef], folds: usize, seed: u64) -> Vec<Vec<TrialRef>> {
    let mut order: Vec<TrialRef> = trials.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.sort_by_key(|t| t.attended.label());
    let mut out = vec![Vec::new(); folds];
    for (i, t) in order.into_iter().enumerate() {
        out[i % folds].push(t);
    }
    out
}

/// Shuffles a pool and holds out one fifth for validation (4:1).
fn split_train_val(mut pool: Vec<TrialRef>, seed: u64) -> (Vec<TrialRef>, Vec<TrialRef>) {
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = ((pool.len() as f64) / 5.0).round() as usize;
    let n_val = n_val.clamp(usize::from(pool.len() > 1), pool.len().saturating_sub(1));
    let train = pool.split_off(n_val);
    (train, pool)
}

/// Subject-specific plans: each fold is the test set once and the remaining
/// trials are split 4:1 into training and validation.
pub fn split_ss(trials: &[TrialRef], folds: usize, seed: u64) -> Result<Vec<FoldPlan>> {
    if folds < 2 || trials.len() < folds {
        return Err(Error::InvalidArgument(format!(
            "{folds}-fold subject-specific split needs at least {folds} trials, got {}",
            trials.len()
        )));
    }
    let groups = deal(trials, folds, seed);
    Ok((0..folds)
        .map(|k| {
            let rest: Vec<TrialRef> = groups
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != k)
                .flat_map(|(_, g)| g.iter().cloned())
                .collect();
            let (train, val) = split_train_val(rest, derive(seed, k as u64));
            FoldPlan {
                fold: k,
                train,
                val,
                test: groups[k].clone(),
            }
        })
        .collect())
}

/// Cross-trial leave-one-subject-out plans.
///
/// The test subject's trials are dealt into `folds`; per plan one fold is the
/// test set and the others go unused. Every other subject's trials join the
/// training pool unless their attended stimulus is attended in the test fold.
pub fn split_si_cross_trial(
    subjects: &[Vec<TrialRef>],
    test_subject: usize,
    folds: usize,
    seed: u64,
) -> Result<Vec<FoldPlan>> {
    if subjects.len() < 2 {
        return Err(Error::InvalidArgument(
            "leave-one-subject-out needs at least 2 subjects".into(),
        ));
    }
    let target = subjects
        .get(test_subject)
        .ok_or_else(|| Error::InvalidArgument(format!("test subject {test_subject} out of range")))?;
    if folds < 2 || target.len() < folds {
        return Err(Error::InvalidArgument(format!(
            "{folds}-fold split needs at least {folds} trials for the test subject, got {}",
            target.len()
        )));
    }
    let groups = deal(target, folds, seed);
    (0..folds)
        .map(|k| {
            let test = groups[k].clone();
            let banned: HashSet<&str> = test.iter().map(|t| t.attended_stimulus.as_str()).collect();
            let pool: Vec<TrialRef> = subjects
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != test_subject)
                .flat_map(|(_, s)| s.iter())
                .filter(|t| !banned.contains(t.attended_stimulus.as_str()))
                .cloned()
                .collect();
            if pool.len() < 2 {
                return Err(Error::InvalidArgument(format!(
                    "stimulus filter leaves {} training trials for subject {test_subject}, fold {k}",
                    pool.len()
                )));
            }
            let (train, val) = split_train_val(pool, derive(seed, k as u64));
            Ok(FoldPlan {
                fold: k,
                train,
                val,
                test,
            })
        })
        .collect()
}

/// One leave-one-subject-out plan covering every trial of the test subject:
/// the pool drops any trial whose attended stimulus the test subject attends
/// anywhere, so the resulting model is clean for all of that subject's folds.
pub fn si_pretraining_plan(subjects: &[Vec<TrialRef>], test_subject: usize, seed: u64) -> Result<FoldPlan> {
    let target = subjects
        .get(test_subject)
        .ok_or_else(|| Error::InvalidArgument(format!("test subject {test_subject} out of range")))?;
    let banned: HashSet<&str> = target.iter().map(|t| t.attended_stimulus.as_str()).collect();
    let pool: Vec<TrialRef> = subjects
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != test_subject)
        .flat_map(|(_, s)| s.iter())
        .filter(|t| !banned.contains(t.attended_stimulus.as_str()))
        .cloned()
        .collect();
    if pool.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "stimulus filter leaves {} pretraining trials for subject {test_subject}",
            pool.len()
        )));
    }
    let (train, val) = split_train_val(pool, seed);
    Ok(FoldPlan {
        fold: 0,
        train,
        val,
        test: target.clone(),
    })
}

/// Attended stimulus ids shared between the test set and the fit set.
pub fn stimulus_leaks(plan: &FoldPlan) -> Vec<String> {
    let test: HashSet<&str> = plan.test.iter().map(|t| t.attended_stimulus.as_str()).collect();
    let mut leaks: Vec<String> = plan
        .train
        .iter()
        .chain(&plan.val)
        .filter(|t| test.contains(t.attended_stimulus.as_str()))
        .map(|t| t.attended_stimulus.clone())
        .collect();
    leaks.sort();
    leaks.dedup();
    leaks
}
