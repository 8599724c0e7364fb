//! The end-to-end attention classifier: Inception encoders for EEG and audio,
//! a Pearson correlation feature layer, a small dense head, and its training loop.

pub mod correlation;
pub mod inception;
pub mod model;
pub mod train;

pub use correlation::{correlation_features, CorrelationLayer};
pub use inception::{BranchSpec, Inception, InceptionSpec, PoolStage};
pub use model::{Aadnet, AadnetSpec};
pub use train::{
    augment_swap, collate, decide_examples, evaluate, examples_from_trials, finetune_ss, random_search, train,
    train_model, trial_examples, write_log_csv, EpochLog, Example, SearchGrid, SearchOutcome, TrainConfig,
    TrainOutcome,
};
