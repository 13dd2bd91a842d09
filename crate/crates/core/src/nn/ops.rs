//! Forward and backward passes of the individual layer types.
//!
//! Layouts: sequences are `[length, channels]`, conv kernels are
//! `[kernel, in_channels, filters]`, dense weights are `[out, in]`. All
//! row-major. Padding is zero padding.

use super::{NnError, Tensor};

fn shape_err<T>(msg: impl Into<String>) -> Result<T, NnError> {
    Err(NnError::ShapeMismatch(msg.into()))
}

pub fn conv1d_output_len(len: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let padded = len + 2 * padding;
    if stride == 0 || kernel == 0 || kernel > padded {
        return None;
    }
    Some((padded - kernel) / stride + 1)
}

fn conv_dims(input: &Tensor, kernel: &Tensor, stride: usize, padding: usize) -> Result<(usize, usize, usize, usize, usize), NnError> {
    let (len, channels) = input.dims2("conv1d input")?;
    let (k, kc, filters) = match kernel.shape()[..] {
        [k, c, f] => (k, c, f),
        _ => return shape_err(format!("conv1d kernel must be rank 3, got {:?}", kernel.shape())),
    };
    if kc != channels {
        return shape_err(format!("conv1d kernel expects {kc} channels, input has {channels}"));
    }
    let out_len = conv1d_output_len(len, k, stride, padding)
        .ok_or_else(|| NnError::ShapeMismatch(format!("conv1d kernel {k} (stride {stride}) does not fit length {len} + 2*{padding}")))?;
    Ok((len, channels, k, filters, out_len))
}

pub fn conv1d_forward(input: &Tensor, kernel: &Tensor, bias: &[f64], stride: usize, padding: usize) -> Result<Tensor, NnError> {
    let (len, channels, k, filters, out_len) = conv_dims(input, kernel, stride, padding)?;
    if bias.len() != filters {
        return shape_err(format!("conv1d bias has {} entries for {filters} filters", bias.len()));
    }
    let x = input.data();
    let w = kernel.data();
    let mut out = vec![0.0; out_len * filters];
    for (i, row) in out.chunks_exact_mut(filters).enumerate() {
        row.copy_from_slice(bias);
        for kk in 0..k {
            let Some(pos) = (i * stride + kk).checked_sub(padding).filter(|&p| p < len) else {
                continue;
            };
            for c in 0..channels {
                let xv = x[pos * channels + c];
                if xv == 0.0 {
                    continue;
                }
                let wrow = &w[(kk * channels + c) * filters..(kk * channels + c + 1) * filters];
                for (o, &wv) in row.iter_mut().zip(wrow) {
                    *o += xv * wv;
                }
            }
        }
    }
    Tensor::new(vec![out_len, filters], out)
}

/// Gradients of a conv1d layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvGrads {
    pub input: Tensor,
    pub kernel: Tensor,
    pub bias: Vec<f64>,
}

pub fn conv1d_backward(grad_out: &Tensor, input: &Tensor, kernel: &Tensor, stride: usize, padding: usize) -> Result<ConvGrads, NnError> {
    let mut gk = Tensor::zeros(kernel.shape().to_vec());
    let mut gb = vec![0.0; kernel.shape().get(2).copied().unwrap_or(0)];
    let gi = conv1d_backward_acc(grad_out, input, kernel, stride, padding, gk.data_mut(), &mut gb)?;
    Ok(ConvGrads { input: gi, kernel: gk, bias: gb })
}

/// Adds parameter gradients into `grad_kernel`/`grad_bias` and returns the
/// input gradient.
pub(crate) fn conv1d_backward_acc(
    grad_out: &Tensor,
    input: &Tensor,
    kernel: &Tensor,
    stride: usize,
    padding: usize,
    grad_kernel: &mut [f64],
    grad_bias: &mut [f64],
) -> Result<Tensor, NnError> {
    let (len, channels, k, filters, out_len) = conv_dims(input, kernel, stride, padding)?;
    if grad_out.shape() != [out_len, filters] {
        return shape_err(format!("conv1d grad_out {:?}, expected [{out_len}, {filters}]", grad_out.shape()));
    }
    if grad_kernel.len() != kernel.len() || grad_bias.len() != filters {
        return shape_err("conv1d gradient buffers do not match parameters");
    }
    let x = input.data();
    let w = kernel.data();
    let mut gi = vec![0.0; len * channels];
    for (i, go) in grad_out.data().chunks_exact(filters).enumerate() {
        for (b, &g) in grad_bias.iter_mut().zip(go) {
            *b += g;
        }
        for kk in 0..k {
            let Some(pos) = (i * stride + kk).checked_sub(padding).filter(|&p| p < len) else {
                continue;
            };
            for c in 0..channels {
                let off = (kk * channels + c) * filters;
                let xv = x[pos * channels + c];
                let gw = &mut grad_kernel[off..off + filters];
                let wrow = &w[off..off + filters];
                if xv != 0.0 {
                    for (gwf, &g) in gw.iter_mut().zip(go) {
                        *gwf += xv * g;
                    }
                }
                gi[pos * channels + c] += dot(wrow, go);
            }
        }
    }
    Tensor::new(vec![len, channels], gi)
}

pub fn maxpool1d_output_len(len: usize, window: usize, stride: usize) -> Option<usize> {
    if window == 0 || stride == 0 || window > len {
        return None;
    }
    Some((len - window) / stride + 1)
}

/// Per-channel window maxima plus the flat input index of each maximum
/// (the first one on ties).
pub fn maxpool1d_forward(input: &Tensor, window: usize, stride: usize) -> Result<(Tensor, Vec<usize>), NnError> {
    let (len, channels) = input.dims2("maxpool1d input")?;
    let out_len = maxpool1d_output_len(len, window, stride)
        .ok_or_else(|| NnError::ShapeMismatch(format!("maxpool1d window {window} (stride {stride}) does not fit length {len}")))?;
    let x = input.data();
    let mut out = vec![0.0; out_len * channels];
    let mut argmax = vec![0; out_len * channels];
    for j in 0..out_len {
        for c in 0..channels {
            let mut best = j * stride * channels + c;
            for w in 1..window {
                let idx = (j * stride + w) * channels + c;
                if x[idx] > x[best] {
                    best = idx;
                }
            }
            out[j * channels + c] = x[best];
            argmax[j * channels + c] = best;
        }
    }
    Ok((Tensor::new(vec![out_len, channels], out)?, argmax))
}

pub fn maxpool1d_backward(grad_out: &Tensor, argmax: &[usize], input_shape: &[usize]) -> Result<Tensor, NnError> {
    if grad_out.len() != argmax.len() {
        return shape_err(format!("maxpool1d grad_out has {} values, argmax {}", grad_out.len(), argmax.len()));
    }
    let mut gi = Tensor::zeros(input_shape.to_vec());
    let n = gi.len();
    let data = gi.data_mut();
    for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
        if idx >= n {
            return shape_err("maxpool1d argmax index out of range");
        }
        data[idx] += g;
    }
    Ok(gi)
}

fn dense_dims(input: &[f64], weights: &Tensor) -> Result<(usize, usize), NnError> {
    let (out, inp) = weights.dims2("dense weights")?;
    if inp != input.len() {
        return shape_err(format!("dense expects {inp} inputs, got {}", input.len()));
    }
    Ok((out, inp))
}

/// `weights · input + bias`.
pub fn dense_forward(input: &[f64], weights: &Tensor, bias: &[f64]) -> Result<Vec<f64>, NnError> {
    let (out, inp) = dense_dims(input, weights)?;
    if bias.len() != out {
        return shape_err(format!("dense bias has {} entries for {out} outputs", bias.len()));
    }
    Ok(weights
        .data()
        .chunks_exact(inp)
        .zip(bias)
        .map(|(row, &b)| b + dot(row, input))
        .collect())
}

/// Dot product with four independent accumulators so the loop vectorizes;
/// the summation order is fixed, so results are still reproducible.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseGrads {
    pub input: Vec<f64>,
    pub weights: Tensor,
    pub bias: Vec<f64>,
}

pub fn dense_backward(grad_out: &[f64], input: &[f64], weights: &Tensor) -> Result<DenseGrads, NnError> {
    let mut gw = Tensor::zeros(weights.shape().to_vec());
    let mut gb = vec![0.0; grad_out.len()];
    let gi = dense_backward_acc(grad_out, input, weights, gw.data_mut(), &mut gb)?;
    Ok(DenseGrads { input: gi, weights: gw, bias: gb })
}

pub(crate) fn dense_backward_acc(
    grad_out: &[f64],
    input: &[f64],
    weights: &Tensor,
    grad_weights: &mut [f64],
    grad_bias: &mut [f64],
) -> Result<Vec<f64>, NnError> {
    let (out, inp) = dense_dims(input, weights)?;
    if grad_out.len() != out || grad_bias.len() != out || grad_weights.len() != weights.len() {
        return shape_err("dense gradient buffers do not match parameters");
    }
    let mut gi = vec![0.0; inp];
    for (o, &g) in grad_out.iter().enumerate() {
        grad_bias[o] += g;
        if g == 0.0 {
            continue;
        }
        let row = &weights.data()[o * inp..(o + 1) * inp];
        let grow = &mut grad_weights[o * inp..(o + 1) * inp];
        for ((gw, gx), (&w, &x)) in grow.iter_mut().zip(gi.iter_mut()).zip(row.iter().zip(input)) {
            *gw += g * x;
            *gx += g * w;
        }
    }
    Ok(gi)
}
