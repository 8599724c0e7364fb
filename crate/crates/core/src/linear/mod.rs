//! Linear decoders: lag matrices, ridge stimulus reconstruction, CCA with an
//! LDA back end, and Pearson correlation.

pub mod cca;
pub mod io;
pub mod lag;
pub mod lda;
pub mod pearson;
pub mod ridge;
pub mod select;
pub mod stats;

pub use cca::{
    cca_classify, cca_features, cca_fit, cca_fit_stats, cca_trial_stats, class_of_stream, stream_of_class, CcaConfig,
    CcaDecision, CcaModel, Projection,
};
pub use lag::{build_lag_matrix, LagMatrix};
pub use lda::{lda_fit, LdaClassifier};
pub use pearson::{pearson, Correlation};
pub use ridge::{
    default_lambda_grid, lsr_classify, lsr_decide, ridge_cv_fit, ridge_cv_fit_stats, ridge_fit, ridge_trial_stats,
    LsrDecision, RidgeCvConfig, RidgeDecoder,
};
pub use select::{combine_j, select_j, window_features};
pub use stats::CrossStats;
