//! Binary metrics, ROC/AUC, k-fold cross-validation and latency
//! measurement.

mod bench;
mod cv;
mod metrics;
mod roc;

pub use bench::{benchmark_latency, HostInfo, LatencyReport, MIN_EVALUATIONS};
pub use cv::{cross_validate, reference, EvalReport, FoldMetrics};
pub use metrics::{confusion, split_report, ConfusionCounts, ScoredPrediction, SplitMetrics, SubsetMetrics};
pub use roc::{roc_auc, RocCurve, RocPoint};

use thiserror::Error;

use crate::dataset::DatasetError;
use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no predictions to evaluate")]
    EmptyInput,
    #[error("ROC needs both positive and negative labels")]
    SingleClassInput,
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("score {0} is not finite")]
    NonFiniteScore(f64),
    #[error("predictions do not line up with records: {0}")]
    Misaligned(String),
    #[error("fold {fold}: {source}")]
    Fold { fold: usize, source: NnError },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}
