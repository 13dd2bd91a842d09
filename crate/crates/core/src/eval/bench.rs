use std::fmt;
use std::time::Instant;

use serde::Serialize;

use super::EvalError;
use crate::nn::{input_tensor, predict_tensor, Model, Tensor};
use crate::seq::EncodedInput;

/// Minimum timed evaluations per benchmark.
pub const MIN_EVALUATIONS: usize = 100;

const WARMUP: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HostInfo {
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
    pub cpu_model: Option<String>,
}

impl HostInfo {
    pub fn detect() -> Self {
        let cpu_model = std::fs::read_to_string("/proc/cpuinfo").ok().and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|m| m.trim().to_string())
        });
        HostInfo {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            cpu_model,
        }
    }
}

impl fmt::Display for HostInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} {} cpus", self.os, self.arch, self.logical_cpus)?;
        if let Some(m) = &self.cpu_model {
            write!(f, " ({m})")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatencyReport {
    pub inputs: usize,
    pub repetitions: usize,
    pub evaluations: usize,
    pub total_seconds: f64,
    pub mean_seconds: f64,
    pub throughput_per_second: f64,
    pub host: HostInfo,
}

impl fmt::Display for LatencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "evaluations      {} ({} inputs x {} reps)", self.evaluations, self.inputs, self.repetitions)?;
        writeln!(f, "total            {:.4} s", self.total_seconds)?;
        writeln!(f, "mean per input   {:.3e} s", self.mean_seconds)?;
        writeln!(f, "throughput       {:.1} inputs/s", self.throughput_per_second)?;
        writeln!(f, "host             {}", self.host)
    }
}

/// Times single-input predictions on the calling thread. Repetitions are
/// raised until at least [`MIN_EVALUATIONS`] predictions are timed.
pub fn benchmark_latency(model: &Model, inputs: &[EncodedInput], repetitions: usize) -> Result<LatencyReport, EvalError> {
    if inputs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let tensors: Vec<Tensor> = inputs.iter().map(input_tensor).collect();
    let repetitions = repetitions.max(1).max(MIN_EVALUATIONS.div_ceil(tensors.len()));
    for t in tensors.iter().cycle().take(WARMUP) {
        std::hint::black_box(predict_tensor(model, t)?);
    }
    let start = Instant::now();
    for _ in 0..repetitions {
        for t in &tensors {
            std::hint::black_box(predict_tensor(model, t)?);
        }
    }
    let total_seconds = start.elapsed().as_secs_f64();
    let evaluations = repetitions * tensors.len();
    let mean_seconds = total_seconds / evaluations as f64;
    Ok(LatencyReport {
        inputs: tensors.len(),
        repetitions,
        evaluations,
        total_seconds,
        mean_seconds,
        throughput_per_second: 1.0 / mean_seconds,
        host: HostInfo::detect(),
    })
}
