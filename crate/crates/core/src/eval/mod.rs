//! Cross-validation plans, windowed scoring, statistics and MESD.

pub mod loco;
pub mod mesd;
pub mod protocol;
pub mod report;
pub mod splits;
pub mod stats;
pub mod windows;

pub use loco::{drop_channel, loco_all, loco_channel_importance, LocoRow};
pub use mesd::{mesd, MesdConfig, MesdResult};
pub use protocol::{
    plan_folds, run_protocol, score_fold, score_folds, train_folds, EvalRow, FoldModel, Method, Pretrain,
    ProtocolConfig, Regime, TrainedFold,
};
pub use report::{
    mean_over_subjects, mesd_rows, pooled_accuracy, read_csv, subject_scores, subject_table, summary_table, write_csv,
    MesdRow, SubjectScore,
};
pub use splits::{
    si_pretraining_plan, split_si_cross_trial, split_ss, stimulus_leaks, trial_refs, FoldPlan, TrialRef, DEFAULT_FOLDS,
};
pub use stats::{accuracy, bonferroni, chance_level, paired_permutation_test};
pub use windows::{make_windows, WindowSpec, Windows, DEFAULT_WINDOWS_S, TEST_OVERLAP};
