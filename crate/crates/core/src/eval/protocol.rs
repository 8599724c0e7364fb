//! Cross-validated training and windowed scoring for every method.
//!
//! Work is split into independent (subject, fold) jobs that run on a rayon
//! pool. Each job derives its seeds from the protocol seed and its own
//! indices only, and results are gathered in job order, so the output does
//! not depend on the number of worker threads.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::splits::{
    si_pretraining_plan, split_si_cross_trial, split_ss, trial_refs, FoldPlan, TrialRef, DEFAULT_FOLDS,
};
use super::windows::{make_windows, WindowSpec, DEFAULT_WINDOWS_S};
use crate::aadnet::{
    decide_examples, examples_from_trials, finetune_ss, train, trial_examples, Aadnet, EpochLog, TrainConfig,
};
use crate::data::{Dataset, Stream, Trial};
use crate::error::{Error, Result};
use crate::linear::{
    cca_fit_stats, cca_trial_stats, combine_j, lda_fit, lsr_decide, ridge_cv_fit_stats, ridge_trial_stats, select_j,
    stream_of_class, window_features, CcaConfig, CcaModel, CrossStats, LdaClassifier, RidgeCvConfig, RidgeDecoder,
};
use crate::seed::derive;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lsr,
    Cca,
    Aadnet,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Lsr, Method::Cca, Method::Aadnet];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Lsr => "lsr",
            Method::Cca => "cca",
            Method::Aadnet => "aadnet",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lsr" => Ok(Method::Lsr),
            "cca" => Ok(Method::Cca),
            "aadnet" => Ok(Method::Aadnet),
            _ => Err(Error::InvalidArgument(format!(
                "unknown method {s:?} (lsr, cca, aadnet)"
            ))),
        }
    }
}

/// Subject-specific or subject-independent evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Ss,
    Si,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Ss => "ss",
            Regime::Si => "si",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ss" => Ok(Regime::Ss),
            "si" => Ok(Regime::Si),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?} (ss, si)"))),
        }
    }
}

/// How the subject-independent AADNet is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pretrain {
    /// One model per (subject, fold) on the cross-trial training pool.
    #[default]
    PerFold,
    /// One model per test subject, trained without any stimulus that subject
    /// attends. Cheaper; valid for every fold of that subject.
    PerSubject,
    /// Subject-specific AADNet trained from scratch, no pretraining.
    Off,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub windows_s: Vec<f64>,
    pub folds: usize,
    pub inner_folds: usize,
    pub seed: u64,
    pub ridge: RidgeCvConfig,
    pub cca: CcaConfig,
    pub train: TrainConfig,
    pub pretrain: Pretrain,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            windows_s: DEFAULT_WINDOWS_S.to_vec(),
            folds: DEFAULT_FOLDS,
            inner_folds: 5,
            seed: 0,
            ridge: RidgeCvConfig::default(),
            cca: CcaConfig::default(),
            train: TrainConfig::default(),
            pretrain: Pretrain::default(),
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.windows_s.is_empty() || self.windows_s.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Config(format!(
                "window lengths must be positive: {:?}",
                self.windows_s
            )));
        }
        if self.folds < 2 || self.inner_folds < 2 {
            return Err(Error::Config("outer and inner fold counts must be at least 2".into()));
        }
        self.train.validate()
    }

    fn subject_seed(&self, subject: usize) -> u64 {
        derive(self.seed, subject as u64)
    }
}

/// What a fold trained.
#[derive(Clone, Debug)]
pub enum FoldModel {
    Lsr(RidgeDecoder),
    /// One LDA per entry of `windows_s`, all on the first `j` components.
    Cca {
        model: CcaModel,
        j: usize,
        lda: Vec<LdaClassifier>,
    },
    Aadnet {
        model: Box<Aadnet<f32>>,
        log: Vec<EpochLog>,
    },
}

#[derive(Clone, Debug)]
pub struct TrainedFold {
    pub subject: usize,
    pub plan: FoldPlan,
    pub model: FoldModel,
}

/// Scores of one fold at one window length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub method: Method,
    pub regime: Regime,
    pub subject: String,
    pub fold: usize,
    pub window_s: f64,
    pub n_windows: usize,
    pub n_correct: usize,
    /// Non-overlapping windows that fit in the test trials; the sample size
    /// behind the chance level.
    pub n_independent: usize,
    pub accuracy: f64,
}

/// Every (subject, fold) plan of a regime, ordered by subject then fold.
pub fn plan_folds(ds: &Dataset, regime: Regime, cfg: &ProtocolConfig) -> Result<Vec<(usize, FoldPlan)>> {
    let refs = trial_refs(ds);
    let mut out = Vec::new();
    for (s, trials) in refs.iter().enumerate() {
        let seed = cfg.subject_seed(s);
        let plans = match regime {
            Regime::Ss => split_ss(trials, cfg.folds, seed)?,
            Regime::Si => split_si_cross_trial(&refs, s, cfg.folds, seed)?,
        };
        out.extend(plans.into_iter().map(|p| (s, p)));
    }
    Ok(out)
}

fn resolve<'a>(ds: &'a Dataset, refs: &[TrialRef]) -> Vec<&'a Trial> {
    refs.iter().map(|r| ds.trial(r.index)).collect()
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {workers} worker threads: {e}")))
}

/// Per-trial sufficient statistics, indexed `[subject][trial]`.
fn trial_stats(ds: &Dataset, f: impl Fn(&Trial) -> Result<CrossStats> + Sync) -> Result<Vec<Vec<CrossStats>>> {
    ds.subjects
        .par_iter()
        .map(|s| s.trials.par_iter().map(&f).collect::<Result<Vec<_>>>())
        .collect()
}

fn gather<'a>(stats: &'a [Vec<CrossStats>], refs: &[TrialRef]) -> Vec<&'a CrossStats> {
    refs.iter().map(|r| &stats[r.index.subject][r.index.trial]).collect()
}

fn train_lsr(ds: &Dataset, plans: Vec<(usize, FoldPlan)>, cfg: &ProtocolConfig) -> Result<Vec<TrainedFold>> {
    let lags = cfg.ridge.lags;
    let stats = trial_stats(ds, |t| ridge_trial_stats(&t.eeg, t.envelope(t.attended), lags))?;
    plans
        .into_par_iter()
        .map(|(subject, plan)| {
            let fit: Vec<CrossStats> = gather(&stats, &plan.fit_set()).into_iter().cloned().collect();
            let cv = ridge_cv_fit_stats(&fit, ds.n_channels(), &cfg.ridge)?;
            Ok(TrainedFold {
                subject,
                plan,
                model: FoldModel::Lsr(cv.decoder),
            })
        })
        .collect()
}

fn train_cca(
    ds: &Dataset,
    regime: Regime,
    plans: Vec<(usize, FoldPlan)>,
    cfg: &ProtocolConfig,
) -> Result<Vec<TrainedFold>> {
    let stats = trial_stats(ds, |t| cca_trial_stats(&t.eeg, t.envelope(t.attended), &cfg.cca))?;
    // Phase one: fold models and the inner-CV choice of J.
    let fitted: Vec<(usize, FoldPlan, CcaModel, Vec<Option<usize>>)> = plans
        .into_par_iter()
        .map(|(subject, plan)| {
            let fit = plan.fit_set();
            let trials = resolve(ds, &fit);
            let fit_stats = gather(&stats, &fit);
            let model = cca_fit_stats(&CrossStats::sum(fit_stats.iter().copied())?, ds.n_channels(), &cfg.cca)?;
            let js = select_j(&trials, &fit_stats, &cfg.windows_s, &cfg.cca, cfg.inner_folds)?;
            Ok((subject, plan, model, js))
        })
        .collect::<Result<_>>()?;

    // Phase two: one J per subject (SS) or one overall (SI), then an LDA per window length.
    let n_subjects = ds.subjects.len();
    let js: Vec<usize> = match regime {
        Regime::Ss => (0..n_subjects)
            .map(|s| {
                let per: Vec<Vec<Option<usize>>> = fitted.iter().filter(|f| f.0 == s).map(|f| f.3.clone()).collect();
                combine_j(&per)
            })
            .collect::<Result<_>>()?,
        Regime::Si => {
            let all: Vec<Vec<Option<usize>>> = fitted.iter().map(|f| f.3.clone()).collect();
            vec![combine_j(&all)?; n_subjects]
        }
    };
    fitted
        .into_par_iter()
        .map(|(subject, plan, model, _)| {
            let j = js[subject].min(model.components());
            let trials = resolve(ds, &plan.fit_set());
            let projections = trials
                .iter()
                .map(|t| model.project(&t.eeg, &[&t.env_a, &t.env_b]))
                .collect::<Result<Vec<_>>>()?;
            let lda = cfg
                .windows_s
                .iter()
                .map(|&w| {
                    let (f, l) = window_features(&projections, &trials, &WindowSpec::test(w), j);
                    if f.is_empty() {
                        return Err(Error::InvalidArgument(format!(
                            "no {w} s windows in the training trials of subject {subject}"
                        )));
                    }
                    lda_fit(&f, &l)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TrainedFold {
                subject,
                plan,
                model: FoldModel::Cca { model, j, lda },
            })
        })
        .collect()
}

fn fold_train_config(cfg: &ProtocolConfig, subject: usize, fold: usize, salt: u64) -> TrainConfig {
    let mut t = cfg.train.clone();
    t.seed = derive(derive(cfg.subject_seed(subject), fold as u64), salt);
    t.checkpoint_path = None;
    t
}

/// Trains on the train part of a plan, early stopping on its val part.
fn fit_plan(ds: &Dataset, plan: &FoldPlan, tcfg: &TrainConfig) -> Result<crate::aadnet::TrainOutcome> {
    let spec = tcfg.train_windows()?;
    let tr = examples_from_trials(&resolve(ds, &plan.train), &spec)?;
    let va = examples_from_trials(&resolve(ds, &plan.val), &spec)?;
    train(ds.n_channels(), &tr, &va, tcfg)
}

fn finetune_plan(
    ds: &Dataset,
    si: &Aadnet<f32>,
    plan: &FoldPlan,
    tcfg: &TrainConfig,
) -> Result<crate::aadnet::TrainOutcome> {
    let spec = tcfg.train_windows()?;
    let tr = examples_from_trials(&resolve(ds, &plan.train), &spec)?;
    let va = examples_from_trials(&resolve(ds, &plan.val), &spec)?;
    finetune_ss(si, &tr, &va, tcfg)
}

const SALT_SI: u64 = 0x51;
const SALT_SS: u64 = 0x55;

fn train_aadnet(
    ds: &Dataset,
    regime: Regime,
    plans: Vec<(usize, FoldPlan)>,
    cfg: &ProtocolConfig,
) -> Result<Vec<TrainedFold>> {
    let refs = trial_refs(ds);
    let n_subjects = ds.subjects.len();
    let needs_si = regime == Regime::Si || cfg.pretrain != Pretrain::Off;
    if needs_si && n_subjects < 2 {
        return Err(Error::InvalidArgument(
            "subject-independent training needs at least 2 subjects; set pretrain = \"off\" for SS only".into(),
        ));
    }

    // Subject-level pretraining, when requested, is shared by all of that subject's folds.
    let per_subject: Vec<Option<Aadnet<f32>>> = if cfg.pretrain == Pretrain::PerSubject {
        (0..n_subjects)
            .into_par_iter()
            .map(|s| {
                let plan = si_pretraining_plan(&refs, s, cfg.subject_seed(s))?;
                Ok(Some(
                    fit_plan(ds, &plan, &fold_train_config(cfg, s, usize::MAX, SALT_SI))?.model,
                ))
            })
            .collect::<Result<_>>()?
    } else {
        vec![None; n_subjects]
    };

    plans
        .into_par_iter()
        .map(|(subject, plan)| {
            let si_cfg = fold_train_config(cfg, subject, plan.fold, SALT_SI);
            let si_model = |ss_plan: &FoldPlan| -> Result<Aadnet<f32>> {
                if let Some(m) = &per_subject[subject] {
                    return Ok(m.clone());
                }
                let si_plans = split_si_cross_trial(&refs, subject, cfg.folds, cfg.subject_seed(subject))?;
                fit_plan(ds, &si_plans[ss_plan.fold], &si_cfg).map(|o| o.model)
            };
            let (model, log) = match regime {
                Regime::Si => {
                    if per_subject[subject].is_some() {
                        (si_model(&plan)?, Vec::new())
                    } else {
                        let out = fit_plan(ds, &plan, &si_cfg)?;
                        (out.model, out.log)
                    }
                }
                Regime::Ss => {
                    let ss_cfg = fold_train_config(cfg, subject, plan.fold, SALT_SS);
                    let out = if cfg.pretrain == Pretrain::Off {
                        fit_plan(ds, &plan, &ss_cfg)?
                    } else {
                        finetune_plan(ds, &si_model(&plan)?, &plan, &ss_cfg)?
                    };
                    (out.model, out.log)
                }
            };
            Ok(TrainedFold {
                subject,
                plan,
                model: FoldModel::Aadnet {
                    model: Box::new(model),
                    log,
                },
            })
        })
        .collect()
}

/// Trains every fold of `method` under `regime` on `workers` threads.
pub fn train_folds(
    ds: &Dataset,
    method: Method,
    regime: Regime,
    cfg: &ProtocolConfig,
    workers: usize,
) -> Result<Vec<TrainedFold>> {
    cfg.validate()?;
    let plans = plan_folds(ds, regime, cfg)?;
    pool(workers)?.install(|| match method {
        Method::Lsr => train_lsr(ds, plans, cfg),
        Method::Cca => train_cca(ds, regime, plans, cfg),
        Method::Aadnet => train_aadnet(ds, regime, plans, cfg),
    })
}

/// Decisions for every test window of one trial.
fn decide_trial(model: &mut FoldModel, trial: &Trial, wi: usize, spans: &[(usize, usize)]) -> Result<Vec<Stream>> {
    match model {
        FoldModel::Lsr(dec) => {
            // Reconstruct once over the whole trial; each window keeps the
            // rows whose lag context starts inside it.
            let recon = dec.reconstruct(&trial.eeg)?;
            spans
                .iter()
                .map(|&(a, b)| {
                    let hi = b.min(recon.len());
                    if hi < a + 2 {
                        return Ok(Stream::A);
                    }
                    Ok(lsr_decide(&recon[a..hi], &trial.env_a[a..hi], &trial.env_b[a..hi])?.choice)
                })
                .collect()
        }
        FoldModel::Cca { model, j, lda } => {
            let p = model.project(&trial.eeg, &[&trial.env_a, &trial.env_b])?;
            Ok(spans
                .iter()
                .map(|&(a, b)| stream_of_class(lda[wi].predict(&p.difference(a, b, *j).0)))
                .collect())
        }
        FoldModel::Aadnet { model, .. } => decide_examples(model, &trial_examples(trial, spans)?),
    }
}

/// Accuracy of one trained fold at every window length of `cfg`.
pub fn score_fold(
    ds: &Dataset,
    fold: &TrainedFold,
    method: Method,
    regime: Regime,
    cfg: &ProtocolConfig,
) -> Result<Vec<EvalRow>> {
    let mut model = fold.model.clone();
    let tests = resolve(ds, &fold.plan.test);
    cfg.windows_s
        .iter()
        .enumerate()
        .map(|(wi, &w)| {
            let spec = WindowSpec::test(w);
            let (mut n_windows, mut n_correct, mut n_independent) = (0, 0, 0);
            for t in &tests {
                let spans = make_windows(t.samples(), t.rate(), &spec).spans;
                if spans.is_empty() {
                    continue;
                }
                let decisions = decide_trial(&mut model, t, wi, &spans)?;
                n_windows += decisions.len();
                n_correct += decisions.iter().filter(|&&d| d == t.attended).count();
                n_independent += t.samples() / spec.samples(t.rate());
            }
            Ok(EvalRow {
                method,
                regime,
                subject: ds.subjects[fold.subject].id.clone(),
                fold: fold.plan.fold,
                window_s: w,
                n_windows,
                n_correct,
                n_independent,
                accuracy: if n_windows == 0 {
                    f64::NAN
                } else {
                    n_correct as f64 / n_windows as f64
                },
            })
        })
        .collect()
}

/// Scores trained folds on `workers` threads; rows come out in fold order.
pub fn score_folds(
    ds: &Dataset,
    folds: &[TrainedFold],
    method: Method,
    regime: Regime,
    cfg: &ProtocolConfig,
    workers: usize,
) -> Result<Vec<EvalRow>> {
    let rows: Vec<Vec<EvalRow>> = pool(workers)?.install(|| {
        folds
            .par_iter()
            .map(|f| score_fold(ds, f, method, regime, cfg))
            .collect::<Result<_>>()
    })?;
    Ok(rows.into_iter().flatten().collect())
}

/// Trains and scores in one go.
pub fn run_protocol(
    ds: &Dataset,
    method: Method,
    regime: Regime,
    cfg: &ProtocolConfig,
    workers: usize,
) -> Result<Vec<EvalRow>> {
    let folds = train_folds(ds, method, regime, cfg, workers)?;
    score_folds(ds, &folds, method, regime, cfg, workers)
}
