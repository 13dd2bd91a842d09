use std::fmt::{self, Write as _};

use serde::Serialize;

use super::metrics::{split_report, ScoredPrediction, SubsetMetrics};
use super::roc::{roc_auc, RocCurve};
use super::EvalError;
use crate::dataset::{kfold_split, LabeledRecord};
use crate::nn::{encode_samples, predict_tensor, train_samples, Sample, TrainConfig};
use crate::par;
use crate::seq::EncodingWeights;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub train_count: usize,
    pub test_count: usize,
    pub binary_accuracy: f64,
    pub multiclass_accuracy: f64,
    pub final_train_loss: f64,
}

/// Pooled held-out results of a k-fold run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub n_records: usize,
    pub n_classes: usize,
    pub k: usize,
    pub seed: u64,
    /// Positive-vs-rest accuracy.
    pub binary_accuracy: f64,
    /// Exact class accuracy over all classes.
    pub multiclass_accuracy: f64,
    pub overall: SubsetMetrics,
    pub perfect_match: SubsetMetrics,
    pub mismatch: SubsetMetrics,
    pub roc: RocCurve,
    pub folds: Vec<FoldMetrics>,
    pub fold_accuracy_mean: f64,
    pub fold_accuracy_std: f64,
    pub predictions: Vec<ScoredPrediction>,
}

/// Trains on k-1 folds and predicts the held-out fold, for every fold. Fold
/// `f` trains with seed `cfg.seed + f`; folds may run in parallel and are
/// merged in fold order.
pub fn cross_validate(
    records: &[LabeledRecord],
    weights: &EncodingWeights,
    cfg: &TrainConfig,
    k: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    weights.validate().map_err(crate::nn::NnError::from)?;
    let samples = encode_samples(records, weights)?;
    let folds = kfold_split(records.len(), k, seed)?;
    let fold_ids: Vec<usize> = (0..k).collect();

    let results = par::map(&fold_ids, |&fold| -> Result<_, EvalError> {
        let train_set: Vec<Sample> = folds.train_indices(fold).into_iter().map(|i| samples[i].clone()).collect();
        let test_idx = folds.test_indices(fold);
        let fold_cfg = TrainConfig { seed: cfg.seed.wrapping_add(fold as u64), ..cfg.clone() };
        let (model, history) = train_samples(&train_set, weights, &fold_cfg).map_err(|e| EvalError::Fold { fold, source: e })?;
        let mut preds = Vec::with_capacity(test_idx.len());
        for i in test_idx {
            let p = predict_tensor(&model, &samples[i].input)?;
            preds.push(ScoredPrediction {
                index: i,
                fold,
                true_class: records[i].class_id,
                predicted_class: p.class,
                predicted_positive: p.is_positive,
                score: p.positive_score(),
            });
        }
        let final_loss = history.epochs.last().map_or(f64::NAN, |e| e.mean_loss);
        Ok((preds, train_set.len(), final_loss))
    });

    let mut predictions = Vec::with_capacity(records.len());
    let mut fold_metrics = Vec::with_capacity(k);
    for (fold, r) in results.into_iter().enumerate() {
        let (preds, train_count, final_train_loss) = r?;
        let test = SubsetMetrics::from_predictions("fold", preds.iter().map(|p| (p, &records[p.index])));
        fold_metrics.push(FoldMetrics {
            fold,
            train_count,
            test_count: preds.len(),
            binary_accuracy: test.accuracy.unwrap_or(0.0),
            multiclass_accuracy: test.multiclass_accuracy.unwrap_or(0.0),
            final_train_loss,
        });
        predictions.extend(preds);
    }
    predictions.sort_by_key(|p| p.index);

    let split = split_report(&predictions, records)?;
    let scores: Vec<f64> = predictions.iter().map(|p| p.score).collect();
    let labels: Vec<bool> = predictions.iter().map(|p| records[p.index].is_positive).collect();
    let roc = roc_auc(&scores, &labels)?;

    let accs: Vec<f64> = fold_metrics.iter().map(|f| f.binary_accuracy).collect();
    let mean = accs.iter().sum::<f64>() / k as f64;
    let std = (accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (k as f64 - 1.0)).sqrt();

    Ok(EvalReport {
        n_records: records.len(),
        n_classes: cfg.n_classes,
        k,
        seed,
        binary_accuracy: split.overall.accuracy.unwrap_or(0.0),
        multiclass_accuracy: split.overall.multiclass_accuracy.unwrap_or(0.0),
        overall: split.overall,
        perfect_match: split.perfect_match,
        mismatch: split.mismatch,
        roc,
        folds: fold_metrics,
        fold_accuracy_mean: mean,
        fold_accuracy_std: std,
        predictions,
    })
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{:.2}%", 100.0 * v))
}

/// Published reference figures for the full three-gene screen, printed
/// next to measured values.
pub mod reference {
    pub const ACCURACY: f64 = 0.84;
    pub const AUC: f64 = 0.839;
    pub const PERFECT_ACCURACY: f64 = 0.8551;
    pub const MISMATCH_ACCURACY: f64 = 0.7750;
    pub const PERFECT_TPR: f64 = 0.9887;
    pub const MISMATCH_TPR: f64 = 0.9844;
    pub const PERFECT_TNR: f64 = 0.7948;
    pub const MISMATCH_TNR: f64 = 0.6692;
    pub const LATENCY_SECONDS: f64 = 0.00055;
}

type Row = (&'static str, fn(&SubsetMetrics) -> String);

impl EvalReport {
    /// Plain-text table: rows are metrics, columns are subsets.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let subsets = [&self.perfect_match, &self.mismatch, &self.overall];
        let _ = writeln!(s, "{:<22}{:>18}{:>18}{:>18}", "", "Perfect Matches", "Mismatch", "Overall");
        let rows: [Row; 5] = [
            ("Accuracy", |m| pct(m.accuracy)),
            ("True Positive Rate", |m| pct(m.tpr)),
            ("True Negative Rate", |m| pct(m.tnr)),
            ("8-class Accuracy", |m| pct(m.multiclass_accuracy)),
            ("Records", |m| if m.empty { "0 (empty)".into() } else { m.count.to_string() }),
        ];
        for (label, f) in rows {
            let _ = writeln!(s, "{label:<22}{:>18}{:>18}{:>18}", f(subsets[0]), f(subsets[1]), f(subsets[2]));
        }
        s
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}-fold cross-validation over {} records ({} classes, split seed {})", self.k, self.n_records, self.n_classes, self.seed)?;
        writeln!(f)?;
        write!(f, "{}", self.table())?;
        writeln!(f)?;
        writeln!(f, "binary accuracy      {:.4}   (reference {:.2})", self.binary_accuracy, reference::ACCURACY)?;
        writeln!(f, "8-class accuracy     {:.4}", self.multiclass_accuracy)?;
        writeln!(f, "AUC                  {:.4}   (reference {:.3})", self.roc.auc, reference::AUC)?;
        writeln!(f, "fold accuracy        {:.4} +/- {:.4}", self.fold_accuracy_mean, self.fold_accuracy_std)?;
        writeln!(
            f,
            "reference table      perfect {:.2}% / mismatch {:.2}% accuracy, TPR {:.2}% / {:.2}%, TNR {:.2}% / {:.2}%",
            100.0 * reference::PERFECT_ACCURACY,
            100.0 * reference::MISMATCH_ACCURACY,
            100.0 * reference::PERFECT_TPR,
            100.0 * reference::MISMATCH_TPR,
            100.0 * reference::PERFECT_TNR,
            100.0 * reference::MISMATCH_TNR,
        )
    }
}
