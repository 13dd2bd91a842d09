//! Screen records: ingestion, octile labeling, fold assignment and planted
//! synthetic data.

mod folds;
mod ingest;
mod labels;
mod synthetic;

pub use folds::{kfold_split, FoldAssignment};
pub use ingest::{
    detect_delimiter, load_records, load_records_path, write_records, ColumnMapping, IngestStats, LoadOptions, RowError,
};
pub use labels::{assign_classes, assign_classes_with, class_ids, ClassBoundaries, LabelOptions, LabeledRecord};
pub use synthetic::{default_position_effect, generate_synthetic, planted_penalty, SyntheticConfig};

use thiserror::Error;

use crate::seq::{mismatch_profile, MismatchProfile, SeqError, Sequence};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing required column {0:?}")]
    MissingColumn(String),
    #[error("line {line}: {message}")]
    InvalidRow { line: u64, message: String },
    #[error("need at least {needed} records, got {got}")]
    TooFewRecords { needed: usize, got: usize },
    #[error("bad fold count k={k} for {n} records (need 2 <= k <= n)")]
    BadK { k: usize, n: usize },
    #[error("bad class count {0} (need at least 2)")]
    BadClassCount(usize),
    #[error("invalid synthetic config: {0}")]
    BadSyntheticConfig(String),
    #[error("efficacy {0} is not finite")]
    NonFiniteEfficacy(f64),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One screen measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct GuideRecord {
    pub guide: Sequence,
    pub target: Sequence,
    /// Knockdown readout; higher means a stronger guide.
    pub efficacy: f64,
    pub gene: String,
    profile: MismatchProfile,
}

impl GuideRecord {
    pub fn new(guide: Sequence, target: Sequence, efficacy: f64, gene: impl Into<String>) -> Result<Self, DatasetError> {
        if !efficacy.is_finite() {
            return Err(DatasetError::NonFiniteEfficacy(efficacy));
        }
        let profile = mismatch_profile(&guide, &target)?;
        Ok(GuideRecord { guide, target, efficacy, gene: gene.into(), profile })
    }

    pub fn profile(&self) -> &MismatchProfile {
        &self.profile
    }

    pub fn is_perfect_match(&self) -> bool {
        self.profile.is_perfect_match()
    }
}
