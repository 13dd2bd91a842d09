//! Screening of Cas13 guide/target RNA pairs.
//!
//! * [`seq`]: sequences, mismatch profiles and the weighted one-hot pair
//!   encoding.
//! * [`dataset`]: screen ingestion, octile labels, k-fold splits and a
//!   planted-effect simulator.
//! * [`nn`]: the convolutional classifier, its training loop and model files.
//! * [`eval`]: confusion metrics, ROC/AUC, cross-validation and latency.
//! * [`analysis`]: efficacy by mismatch position and replaced base.
//!
//! Data-parallel loops (mini-batch gradients, folds, batch scoring) use rayon
//! when the default `parallel` feature is on and fall back to plain loops
//! otherwise. Both builds produce bit-identical results.

pub mod analysis;
pub mod dataset;
pub mod eval;
pub mod nn;
pub mod par;
pub mod seq;

use nn::{predict_tensor, Model, NnError, Prediction, Tensor};

/// Scores many inputs, in parallel when enabled; output order matches input.
pub fn predict_batch(model: &Model, inputs: &[Tensor]) -> Result<Vec<Prediction>, NnError> {
    par::map(inputs, |x| predict_tensor(model, x)).into_iter().collect()
}
