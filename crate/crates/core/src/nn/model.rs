use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::{argmax, relu_in_place, softmax};
use super::ops::{
    conv1d_backward_acc, conv1d_forward, conv1d_output_len, dense_backward_acc, dense_forward, maxpool1d_backward,
    maxpool1d_forward, maxpool1d_output_len,
};
use super::{NnError, Tensor};
use crate::seq::{EncodedInput, EncodingWeights, CHANNELS};

/// Configurable part of the network; the final `Dense(n_classes)` layer is
/// always appended.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchitectureConfig {
    pub conv_filters: Vec<usize>,
    pub kernel: usize,
    pub conv_stride: usize,
    pub padding: usize,
    pub pool_window: usize,
    pub pool_stride: usize,
    pub dense_units: Vec<usize>,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        ArchitectureConfig {
            conv_filters: vec![32, 16],
            kernel: 3,
            conv_stride: 1,
            padding: 0,
            pool_window: 2,
            pool_stride: 2,
            dense_units: vec![400, 200, 100, 50, 25],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerSpec {
    Conv1d { filters: usize, kernel: usize, stride: usize, padding: usize },
    MaxPool1d { window: usize, stride: usize },
    Flatten,
    Dense { units: usize },
}

/// Activation shape between layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Seq { len: usize, channels: usize },
    Flat(usize),
}

impl Shape {
    pub fn size(self) -> usize {
        match self {
            Shape::Seq { len, channels } => len * channels,
            Shape::Flat(n) => n,
        }
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Shape::Seq { len, channels } => write!(f, "{len}x{channels}"),
            Shape::Flat(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Architecture {
    pub input_len: usize,
    pub input_channels: usize,
    pub n_classes: usize,
    pub layers: Vec<LayerSpec>,
}

impl Architecture {
    pub fn from_config(cfg: &ArchitectureConfig, input_len: usize, n_classes: usize) -> Self {
        let mut layers: Vec<LayerSpec> = cfg
            .conv_filters
            .iter()
            .map(|&filters| LayerSpec::Conv1d { filters, kernel: cfg.kernel, stride: cfg.conv_stride, padding: cfg.padding })
            .collect();
        if cfg.pool_window > 0 {
            layers.push(LayerSpec::MaxPool1d { window: cfg.pool_window, stride: cfg.pool_stride });
        }
        layers.push(LayerSpec::Flatten);
        layers.extend(cfg.dense_units.iter().map(|&units| LayerSpec::Dense { units }));
        layers.push(LayerSpec::Dense { units: n_classes });
        Architecture { input_len, input_channels: CHANNELS, n_classes, layers }
    }

    /// Output shape of every layer; fails if the layers do not chain.
    pub fn output_shapes(&self) -> Result<Vec<Shape>, NnError> {
        let bad = |i: usize, msg: String| Err(NnError::InvalidArchitecture(format!("layer {i}: {msg}")));
        if self.n_classes < 2 {
            return Err(NnError::InvalidArchitecture(format!("need at least 2 classes, got {}", self.n_classes)));
        }
        let mut shape = Shape::Seq { len: self.input_len, channels: self.input_channels };
        let mut shapes = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            shape = match (*layer, shape) {
                (LayerSpec::Conv1d { filters, kernel, stride, padding }, Shape::Seq { len, .. }) => {
                    if filters == 0 {
                        return bad(i, "conv1d with zero filters".into());
                    }
                    match conv1d_output_len(len, kernel, stride, padding) {
                        Some(len) => Shape::Seq { len, channels: filters },
                        None => return bad(i, format!("conv1d kernel {kernel} stride {stride} does not fit length {len}")),
                    }
                }
                (LayerSpec::MaxPool1d { window, stride }, Shape::Seq { len, channels }) => match maxpool1d_output_len(len, window, stride) {
                    Some(len) => Shape::Seq { len, channels },
                    None => return bad(i, format!("maxpool window {window} stride {stride} does not fit length {len}")),
                },
                (LayerSpec::Flatten, Shape::Seq { .. }) => Shape::Flat(shape.size()),
                (LayerSpec::Dense { units }, Shape::Flat(_)) if units > 0 => Shape::Flat(units),
                (layer, shape) => return bad(i, format!("{layer:?} cannot follow shape {shape}")),
            };
            shapes.push(shape);
        }
        match self.layers.last() {
            Some(LayerSpec::Dense { units }) if *units == self.n_classes => Ok(shapes),
            _ => Err(NnError::InvalidArchitecture(format!("final layer must be Dense({})", self.n_classes))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    /// He-uniform hidden layers, small uniform output layer.
    HeUniform,
    /// Glorot-uniform hidden layers, small uniform output layer.
    #[default]
    XavierUniform,
}

/// Half-width of the uniform output-layer initializer.
pub const OUTPUT_INIT_LIMIT: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Layer {
    Conv1d { kernel: Tensor, bias: Vec<f64>, stride: usize, padding: usize },
    MaxPool1d { window: usize, stride: usize },
    Flatten,
    Dense { weights: Tensor, bias: Vec<f64>, relu: bool },
}

/// A built network with its parameters and the encoding it expects.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    arch: Architecture,
    shapes: Vec<Shape>,
    layers: Vec<Layer>,
    encoding: EncodingWeights,
}

/// Activations saved by a forward pass for backpropagation.
pub struct Trace {
    /// `acts[0]` is the input, `acts[i + 1]` the output of layer `i`.
    acts: Vec<Tensor>,
    argmax: Vec<Vec<usize>>,
}

impl Trace {
    pub fn logits(&self) -> &[f64] {
        self.acts.last().expect("trace has input").data()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub probabilities: Vec<f64>,
    pub class: usize,
    pub is_positive: bool,
}

impl Prediction {
    /// Probability mass on the top (positive) class.
    pub fn positive_score(&self) -> f64 {
        *self.probabilities.last().expect("non-empty probabilities")
    }
}

impl Model {
    /// All parameters zero.
    pub fn zeros(arch: Architecture, encoding: EncodingWeights) -> Result<Self, NnError> {
        let shapes = arch.output_shapes()?;
        if arch.input_len != encoding.rows() {
            return Err(NnError::InvalidArchitecture(format!(
                "input length {} does not match encoding rows {}",
                arch.input_len,
                encoding.rows()
            )));
        }
        let mut prev = Shape::Seq { len: arch.input_len, channels: arch.input_channels };
        let last = arch.layers.len() - 1;
        let mut layers = Vec::with_capacity(arch.layers.len());
        for (i, (spec, &shape)) in arch.layers.iter().zip(&shapes).enumerate() {
            layers.push(match *spec {
                LayerSpec::Conv1d { filters, kernel, stride, padding } => {
                    let Shape::Seq { channels, .. } = prev else { unreachable!("validated") };
                    Layer::Conv1d { kernel: Tensor::zeros(vec![kernel, channels, filters]), bias: vec![0.0; filters], stride, padding }
                }
                LayerSpec::MaxPool1d { window, stride } => Layer::MaxPool1d { window, stride },
                LayerSpec::Flatten => Layer::Flatten,
                LayerSpec::Dense { units } => Layer::Dense {
                    weights: Tensor::zeros(vec![units, prev.size()]),
                    bias: vec![0.0; units],
                    relu: i != last,
                },
            });
            prev = shape;
        }
        Ok(Model { arch, shapes, layers, encoding })
    }

    pub fn new<R: Rng>(arch: Architecture, encoding: EncodingWeights, init: InitScheme, rng: &mut R) -> Result<Self, NnError> {
        let mut model = Model::zeros(arch, encoding)?;
        let last = model.layers.len() - 1;
        for (i, layer) in model.layers.iter_mut().enumerate() {
            let (weights, fan_in, fan_out) = match layer {
                Layer::Conv1d { kernel, .. } => {
                    let [k, c, f] = kernel.shape()[..] else { unreachable!() };
                    (kernel.data_mut(), k * c, k * f)
                }
                Layer::Dense { weights, .. } => {
                    let [o, n] = weights.shape()[..] else { unreachable!() };
                    (weights.data_mut(), n, o)
                }
                _ => continue,
            };
            let limit = if i == last {
                OUTPUT_INIT_LIMIT
            } else {
                match init {
                    InitScheme::HeUniform => (6.0 / fan_in as f64).sqrt(),
                    InitScheme::XavierUniform => (6.0 / (fan_in + fan_out) as f64).sqrt(),
                }
            };
            for w in weights.iter_mut() {
                *w = rng.random_range(-limit..=limit);
            }
        }
        Ok(model)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn encoding(&self) -> &EncodingWeights {
        &self.encoding
    }

    pub fn n_classes(&self) -> usize {
        self.arch.n_classes
    }

    pub fn fingerprint_matches(&self, other: &EncodingWeights) -> bool {
        self.encoding.fingerprint() == other.fingerprint()
    }

    /// Parameter blocks in layer order: weights then bias for each
    /// parameterized layer.
    pub fn param_blocks(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Conv1d { kernel, bias, .. } => {
                    out.push(kernel.data());
                    out.push(bias.as_slice());
                }
                Layer::Dense { weights, bias, .. } => {
                    out.push(weights.data());
                    out.push(bias.as_slice());
                }
                _ => {}
            }
        }
        out
    }

    pub fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Conv1d { kernel, bias, .. } => {
                    out.push(kernel.data_mut());
                    out.push(bias.as_mut_slice());
                }
                Layer::Dense { weights, bias, .. } => {
                    out.push(weights.data_mut());
                    out.push(bias.as_mut_slice());
                }
                _ => {}
            }
        }
        out
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.param_blocks().iter().map(|b| b.len()).collect()
    }

    pub fn num_params(&self) -> usize {
        self.block_sizes().iter().sum()
    }

    /// Zeroed gradient buffers matching [`Model::param_blocks`].
    pub fn zero_grads(&self) -> Vec<Vec<f64>> {
        self.block_sizes().into_iter().map(|n| vec![0.0; n]).collect()
    }

    fn check_input(&self, input: &Tensor) -> Result<(), NnError> {
        if input.shape() != [self.arch.input_len, self.arch.input_channels] {
            return Err(NnError::ShapeMismatch(format!(
                "model expects input [{}, {}], got {:?}",
                self.arch.input_len,
                self.arch.input_channels,
                input.shape()
            )));
        }
        Ok(())
    }

    fn apply(&self, layer: &Layer, x: &Tensor, shape: Shape) -> Result<(Tensor, Vec<usize>), NnError> {
        Ok(match layer {
            Layer::Conv1d { kernel, bias, stride, padding } => {
                let mut y = conv1d_forward(x, kernel, bias, *stride, *padding)?;
                relu_in_place(y.data_mut());
                (y, Vec::new())
            }
            Layer::MaxPool1d { window, stride } => maxpool1d_forward(x, *window, *stride)?,
            Layer::Flatten => (x.clone().reshape(vec![shape.size()])?, Vec::new()),
            Layer::Dense { weights, bias, relu } => {
                let mut y = dense_forward(x.data(), weights, bias)?;
                if *relu {
                    relu_in_place(&mut y);
                }
                (Tensor::new(vec![y.len()], y)?, Vec::new())
            }
        })
    }

    /// Raw output scores (pre-softmax).
    pub fn logits(&self, input: &Tensor) -> Result<Vec<f64>, NnError> {
        self.check_input(input)?;
        let mut x = input.clone();
        for (layer, &shape) in self.layers.iter().zip(&self.shapes) {
            x = self.apply(layer, &x, shape)?.0;
        }
        Ok(x.into_data())
    }

    pub fn forward_trace(&self, input: &Tensor) -> Result<Trace, NnError> {
        self.check_input(input)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut argmax = Vec::with_capacity(self.layers.len());
        acts.push(input.clone());
        for (layer, &shape) in self.layers.iter().zip(&self.shapes) {
            let (y, arg) = self.apply(layer, acts.last().expect("input pushed"), shape)?;
            acts.push(y);
            argmax.push(arg);
        }
        Ok(Trace { acts, argmax })
    }

    /// Backpropagates `grad_logits` through a trace and adds the parameter
    /// gradients into `grads` (laid out as [`Model::zero_grads`]). Returns the
    /// gradient with respect to the input.
    pub fn backward(&self, trace: &Trace, grad_logits: &[f64], grads: &mut [Vec<f64>]) -> Result<Tensor, NnError> {
        if grads.len() != self.block_sizes().len() {
            return Err(NnError::ShapeMismatch("gradient block count does not match model".into()));
        }
        let mut block = grads.len();
        let mut g = Tensor::new(vec![grad_logits.len()], grad_logits.to_vec())?;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &trace.acts[i];
            let output = &trace.acts[i + 1];
            g = match layer {
                Layer::Conv1d { kernel, stride, padding, .. } => {
                    mask_relu(g.data_mut(), output.data());
                    block -= 2;
                    let (gk, gb) = split_pair(grads, block);
                    conv1d_backward_acc(&g, input, kernel, *stride, *padding, gk, gb)?
                }
                Layer::MaxPool1d { .. } => maxpool1d_backward(&g, &trace.argmax[i], input.shape())?,
                Layer::Flatten => g.reshape(input.shape().to_vec())?,
                Layer::Dense { weights, relu, .. } => {
                    if *relu {
                        mask_relu(g.data_mut(), output.data());
                    }
                    block -= 2;
                    let (gw, gb) = split_pair(grads, block);
                    let gi = dense_backward_acc(g.data(), input.data(), weights, gw, gb)?;
                    Tensor::new(input.shape().to_vec(), gi)?
                }
            };
        }
        Ok(g)
    }

    /// Layer table with output shapes and parameter counts.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "input                        -> {}x{}", self.arch.input_len, self.arch.input_channels);
        for ((spec, shape), layer) in self.arch.layers.iter().zip(&self.shapes).zip(&self.layers) {
            let name = match *spec {
                LayerSpec::Conv1d { filters, kernel, stride, padding } => format!("conv1d(f={filters},k={kernel},s={stride},p={padding})"),
                LayerSpec::MaxPool1d { window, stride } => format!("maxpool1d(w={window},s={stride})"),
                LayerSpec::Flatten => "flatten".to_string(),
                LayerSpec::Dense { units } => format!("dense({units})"),
            };
            let params = match layer {
                Layer::Conv1d { kernel, bias, .. } => kernel.len() + bias.len(),
                Layer::Dense { weights, bias, .. } => weights.len() + bias.len(),
                _ => 0,
            };
            let _ = writeln!(out, "{name:<28} -> {:<8} params {params}", shape.to_string());
        }
        let _ = writeln!(out, "total params {}", self.num_params());
        out
    }
}

fn mask_relu(grad: &mut [f64], output: &[f64]) {
    for (g, &y) in grad.iter_mut().zip(output) {
        if y <= 0.0 {
            *g = 0.0;
        }
    }
}

fn split_pair(grads: &mut [Vec<f64>], at: usize) -> (&mut [f64], &mut [f64]) {
    let (a, b) = grads[at..at + 2].split_at_mut(1);
    (a[0].as_mut_slice(), b[0].as_mut_slice())
}

pub fn input_tensor(input: &EncodedInput) -> Tensor {
    Tensor::new(vec![input.rows, CHANNELS], input.values.clone()).expect("encoded input is rows x 4")
}

/// Softmax probabilities and the argmax class (lowest index on ties).
pub fn predict(model: &Model, input: &EncodedInput) -> Result<Prediction, NnError> {
    predict_tensor(model, &input_tensor(input))
}

pub fn predict_tensor(model: &Model, input: &Tensor) -> Result<Prediction, NnError> {
    let probabilities = softmax(&model.logits(input)?);
    let class = argmax(&probabilities);
    Ok(Prediction { is_positive: class == model.n_classes() - 1, probabilities, class })
}
