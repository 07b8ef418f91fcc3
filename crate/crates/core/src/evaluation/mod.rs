//! The cross-validated comparison of raw and quench-mapped features.
//!
//! For every fold, imputation, scaling, feature selection and couplings are
//! fit on the training rows only. Hyperparameters are picked on a stratified
//! inner split of the training rows, the winner is refit and scored on the
//! test rows, and every anneal time in the sweep gets its own mapping and its
//! own model selection.

mod cache;
mod config;
mod experiment;
mod fold;

pub use cache::{QuenchCache, CACHE_DIR_ENV};
pub use config::{
    CvSettings, DatasetSettings, ExperimentConfig, KernelChoice, ModelFamily, ModelSettings, OutputSettings,
    QuenchSettings,
};
pub use experiment::{
    parse_folds_csv, read_folds_csv, run_experiment, run_experiment_on, summarize, write_folds_csv, write_summary_csv, FoldRecord,
    GroupSummary, SkippedFold, SweepResult, METRICS,
};
pub use fold::{fit_fold_artifacts, run_fold, FoldArtifacts, FoldRunner, ModelOutcome, PreparedFold, Representation};
