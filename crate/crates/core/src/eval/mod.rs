//! Leave-one-subject-out evaluation, metrics and statistical tests.

mod loso;
mod metrics;
mod stats;
mod validation;

use thiserror::Error;

use crate::mlp::MlpError;
use crate::spectral::SpectralError;

pub use loso::{
    loso_split, run_loso, ActivityAccuracy, Fold, FoldReport, LosoConfig, LosoReport, Prediction,
};
pub use metrics::{
    accuracy, mae, mape, mean_std, median, to_vas_linear, to_vas_sqrt, NaiveBaseline,
    POWER_SCALE_MAX_MW,
};
pub use stats::{
    average_ranks, linear_fit, min_max_normalize, spearman, wilcoxon_signed_rank, StatTestResult,
    TestMethod, WilcoxonMode, WILCOXON_EXACT_MAX_N,
};
pub use validation::{
    adjacent_level_tests, error_by_range, grand_level_means, level_means, level_spearman,
    scale_fits, summarize, LevelComparison, LevelMeans, LevelObservation, RangeError, ScaleFit,
    Summary,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("empty input")]
    EmptyInput,
    #[error("inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("negative power {0} mW")]
    NegativePower(f64),
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("need at least {needed} pairs, got {actual}")]
    TooFewPairs { needed: usize, actual: usize },
    #[error("input is constant; statistic undefined")]
    ConstantInput,
    #[error("cross-validation needs at least two participants")]
    SingleParticipant,
    #[error("fold for participant '{participant}' failed: {source}")]
    Fold {
        participant: String,
        #[source]
        source: MlpError,
    },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("sample {0} has no target")]
    MissingTarget(usize),
}
