//! Growth statistics, recovery metrics, fit comparison and attribute
//! association summaries.

mod fit;
mod growth;
mod recovery;
mod replicate;
mod tetrachoric;

pub use fit::{fit_indices, fit_summary, likelihood_ratio_test, FitSummary, LikelihoodRatioTest};
pub use growth::{covariance_to_correlation, mastery_summary, overall_growth, MasterySummary, OverallGrowth};
pub use recovery::{
    bias_rmse, classification_rates, recovery_metrics, ClassificationRates, ErrorStats, RecoveryInput,
    RecoveryReport, ITEM_CLASSES,
};
pub use replicate::{
    person_sample_seed, replicate_condition, replication_seed, PersonSampling, PersonThetaRecovery, ReplicationOutcome,
    ReplicationSummary,
};
pub use tetrachoric::{
    attribute_correlations, bivariate_normal_cdf, tetrachoric_correlation, ClassificationRule, Tetrachoric,
    TetrachoricFlag,
};
