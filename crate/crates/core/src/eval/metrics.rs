use serde::Serialize;

use super::EvalError;
use crate::dataset::LabeledRecord;

/// Binary confusion counts; positive means the top efficacy class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    /// `tp / (tp + fn)`.
    pub fn tpr(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `tn / (tn + fp)`.
    pub fn tnr(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Counts from `(predicted_positive, actually_positive)` pairs.
pub fn confusion(pairs: &[(bool, bool)]) -> Result<ConfusionCounts, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut c = ConfusionCounts::default();
    for &(p, a) in pairs {
        c.add(p, a);
    }
    Ok(c)
}

/// A held-out prediction for one record.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoredPrediction {
    pub index: usize,
    pub fold: usize,
    pub true_class: usize,
    pub predicted_class: usize,
    pub predicted_positive: bool,
    /// Probability of the positive class.
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsetMetrics {
    pub name: String,
    pub count: usize,
    /// Set when no record falls in the subset; rates are then absent.
    pub empty: bool,
    pub confusion: ConfusionCounts,
    pub accuracy: Option<f64>,
    pub multiclass_accuracy: Option<f64>,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
}

impl SubsetMetrics {
    pub fn from_predictions<'a>(name: &str, items: impl IntoIterator<Item = (&'a ScoredPrediction, &'a LabeledRecord)>) -> Self {
        let mut confusion = ConfusionCounts::default();
        let mut exact = 0;
        for (p, r) in items {
            confusion.add(p.predicted_positive, r.is_positive);
            exact += usize::from(p.predicted_class == r.class_id);
        }
        let count = confusion.total();
        SubsetMetrics {
            name: name.to_string(),
            count,
            empty: count == 0,
            confusion,
            accuracy: confusion.accuracy(),
            multiclass_accuracy: ratio(exact, count),
            tpr: confusion.tpr(),
            tnr: confusion.tnr(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitMetrics {
    pub overall: SubsetMetrics,
    pub perfect_match: SubsetMetrics,
    pub mismatch: SubsetMetrics,
}

/// Metrics over all predictions and separately over perfect-match and
/// mismatched records. `predictions[i].index` points into `records`.
pub fn split_report(predictions: &[ScoredPrediction], records: &[LabeledRecord]) -> Result<SplitMetrics, EvalError> {
    if let Some(p) = predictions.iter().find(|p| p.index >= records.len()) {
        return Err(EvalError::Misaligned(format!("prediction for record {} but only {} records", p.index, records.len())));
    }
    let pairs = || predictions.iter().map(|p| (p, &records[p.index]));
    Ok(SplitMetrics {
        overall: SubsetMetrics::from_predictions("overall", pairs()),
        perfect_match: SubsetMetrics::from_predictions("perfect_match", pairs().filter(|(_, r)| r.record.is_perfect_match())),
        mismatch: SubsetMetrics::from_predictions("mismatch", pairs().filter(|(_, r)| !r.record.is_perfect_match())),
    })
}
