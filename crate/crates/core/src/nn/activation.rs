pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

pub(crate) fn relu_in_place(x: &mut [f64]) {
    for v in x {
        *v = v.max(0.0);
    }
}

/// Gradient through ReLU given the layer's post-activation output.
pub fn relu_backward(grad: &[f64], output: &[f64]) -> Vec<f64> {
    grad.iter().zip(output).map(|(&g, &y)| if y > 0.0 { g } else { 0.0 }).collect()
}

fn log_sum_exp(x: &[f64]) -> f64 {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + x.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn log_softmax(x: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(x);
    x.iter().map(|&v| v - lse).collect()
}

/// `-ln p[class]` for an already-normalized probability vector.
pub fn cross_entropy(p: &[f64], class: usize) -> f64 {
    -p[class].ln()
}

/// Softmax followed by cross-entropy, in log-sum-exp form. Returns the loss
/// and its gradient with respect to the logits (`softmax - one_hot`).
pub fn softmax_cross_entropy(logits: &[f64], class: usize) -> (f64, Vec<f64>) {
    let loss = log_sum_exp(logits) - logits[class];
    let mut grad = softmax(logits);
    grad[class] -= 1.0;
    (loss.max(0.0), grad)
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate() {
        if v > x[best] {
            best = i;
        }
    }
    best
}
