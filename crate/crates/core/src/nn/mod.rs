//! A small convolutional classifier written from the layer primitives up:
//! conv1d, max-pooling, dense, ReLU, softmax cross-entropy, Adam, and a
//! versioned binary model format.

mod activation;
mod adam;
mod io;
mod model;
mod ops;
mod tensor;
mod train;

pub use activation::{argmax, cross_entropy, log_softmax, relu, relu_backward, softmax, softmax_cross_entropy};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use io::{load_model, model_from_bytes, model_to_bytes, save_model, FORMAT_VERSION, MAGIC};
pub use model::{
    input_tensor, predict, predict_tensor, Architecture, ArchitectureConfig, InitScheme, LayerSpec, Model, Prediction,
    Shape, Trace, OUTPUT_INIT_LIMIT,
};
pub use ops::{
    conv1d_backward, conv1d_forward, conv1d_output_len, dense_backward, dense_forward, maxpool1d_backward, maxpool1d_forward,
    maxpool1d_output_len, ConvGrads, DenseGrads,
};
pub use tensor::Tensor;
pub use train::{encode_samples, mean_loss, train, train_samples, EpochStats, Sample, TrainConfig, TrainHistory, Trainer};

use thiserror::Error;

use crate::seq::SeqError;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),
    #[error("non-finite values: {0}")]
    NonFinite(String),
    #[error("model file version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt model file: {0}")]
    CorruptFile(String),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
