//! Exact queries over compiled diagrams.
//!
//! All queries take the manager mutably because conditioning and conjunction
//! build nodes and fill caches; a manager's node budget therefore also bounds
//! every query here.

mod explain;
mod queries;
mod report;
mod robustness;

pub use explain::{fooling_complete, is_minimal, is_sufficient, pi_explanation, Explanation};
pub use queries::{marginal, marginals, unateness, unateness_all, Unateness};
pub use report::{histogram_csv, marginals_csv, marginals_pgm, unateness_csv};
pub use robustness::{
    dataset_average_robustness, instance_robustness, max_robustness, model_robustness, robust_sets,
    robustness_histogram, HistogramRow, Polarity, PolarityProfile, Robustness, RobustnessProfile,
};

use thiserror::Error;

use crate::obdd::ObddError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("the function is constant, so every instance has infinite robustness")]
    Trivial,
    #[error("the function has no models")]
    Unsatisfiable,
    #[error("the partial instance does not fix the classification")]
    NotSufficient,
    #[error("instance has {got} bits, expected {expected}")]
    InstanceLength { expected: usize, got: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Obdd(#[from] ObddError),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;
