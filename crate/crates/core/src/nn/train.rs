use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::{argmax, softmax_cross_entropy};
use super::adam::{adam_step, AdamConfig, AdamState};
use super::model::{input_tensor, Architecture, ArchitectureConfig, InitScheme, Model};
use super::{NnError, Tensor};
use crate::dataset::LabeledRecord;
use crate::par;
use crate::seq::{encode_pair, EncodingWeights};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub init: InitScheme,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Stop after this many epochs without a lower mean training loss.
    pub patience: Option<usize>,
    pub n_classes: usize,
    pub architecture: ArchitectureConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        TrainConfig {
            epochs: 30,
            batch_size: 32,
            seed: 42,
            init: InitScheme::XavierUniform,
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            patience: None,
            n_classes: 8,
            architecture: ArchitectureConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, epsilon: self.epsilon }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: &str| Err(NnError::InvalidConfig(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad("lr must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.n_classes < 2 {
            return bad("n_classes must be at least 2");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn final_accuracy(&self) -> f64 {
        self.epochs.last().map_or(0.0, |e| e.accuracy)
    }
}

/// One encoded training example.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub input: Tensor,
    pub class: usize,
}

pub fn encode_samples(records: &[LabeledRecord], weights: &EncodingWeights) -> Result<Vec<Sample>, NnError> {
    records
        .iter()
        .map(|r| {
            Ok(Sample {
                input: input_tensor(&encode_pair(&r.record.guide, &r.record.target, weights)?),
                class: r.class_id,
            })
        })
        .collect()
}

/// Examples per gradient partial sum. Fixed so the reduction order (and the
/// trained weights) do not depend on the worker count.
const GRAD_CHUNK: usize = 8;

pub fn train(records: &[LabeledRecord], weights: &EncodingWeights, cfg: &TrainConfig) -> Result<(Model, TrainHistory), NnError> {
    weights.validate()?;
    let samples = encode_samples(records, weights)?;
    train_samples(&samples, weights, cfg)
}

pub fn train_samples(samples: &[Sample], weights: &EncodingWeights, cfg: &TrainConfig) -> Result<(Model, TrainHistory), NnError> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(NnError::DegenerateDataset("no training records".into()));
    }
    if let Some(s) = samples.iter().find(|s| s.class >= cfg.n_classes) {
        return Err(NnError::DegenerateDataset(format!("class {} out of range for {} classes", s.class, cfg.n_classes)));
    }
    if samples.iter().all(|s| s.class == samples[0].class) {
        return Err(NnError::DegenerateDataset(format!("every training record is class {}", samples[0].class)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let arch = Architecture::from_config(&cfg.architecture, weights.rows(), cfg.n_classes);
    let mut model = Model::new(arch, weights.clone(), cfg.init, &mut rng)?;
    let mut trainer = Trainer::new(&model, cfg.adam());

    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut best = f64::INFINITY;
    let mut stale = 0;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, hits) = trainer.step(&mut model, samples, batch)?;
            loss_sum += loss;
            correct += hits;
        }
        let mean_loss = loss_sum / samples.len() as f64;
        if !mean_loss.is_finite() {
            return Err(NnError::NonFinite(format!("training loss diverged at epoch {epoch}")));
        }
        history.epochs.push(EpochStats { epoch, mean_loss, accuracy: correct as f64 / samples.len() as f64 });
        if let Some(patience) = cfg.patience {
            if mean_loss < best {
                best = mean_loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    history.stopped_early = true;
                    break;
                }
            }
        }
    }
    Ok((model, history))
}

/// Optimizer state plus reusable gradient buffers.
pub struct Trainer {
    adam: AdamState,
    partials: Vec<Vec<Vec<f64>>>,
    total: Vec<Vec<f64>>,
}

impl Trainer {
    pub fn new(model: &Model, adam: AdamConfig) -> Self {
        Trainer { adam: AdamState::new(adam, &model.block_sizes()), partials: Vec::new(), total: model.zero_grads() }
    }

    pub fn adam_state(&self) -> &AdamState {
        &self.adam
    }

    /// Mean-loss gradient over `batch` (indices into `samples`) followed by
    /// one Adam update. Returns the summed batch loss and the number of
    /// correct argmax predictions, both measured before the update.
    pub fn step(&mut self, model: &mut Model, samples: &[Sample], batch: &[usize]) -> Result<(f64, usize), NnError> {
        let chunks: Vec<&[usize]> = batch.chunks(GRAD_CHUNK).collect();
        while self.partials.len() < chunks.len() {
            self.partials.push(model.zero_grads());
        }
        let frozen: &Model = model;
        let results = par::zip_map_mut(&mut self.partials[..chunks.len()], &chunks, |grads, chunk| {
            for g in grads.iter_mut() {
                g.fill(0.0);
            }
            let mut loss = 0.0;
            let mut hits = 0;
            for &i in chunk.iter() {
                let s = &samples[i];
                let trace = frozen.forward_trace(&s.input)?;
                let (l, grad_logits) = softmax_cross_entropy(trace.logits(), s.class);
                loss += l;
                hits += usize::from(argmax(trace.logits()) == s.class);
                frozen.backward(&trace, &grad_logits, grads)?;
            }
            Ok::<_, NnError>((loss, hits))
        });
        let mut loss = 0.0;
        let mut hits = 0;
        for r in results {
            let (l, h) = r?;
            loss += l;
            hits += h;
        }

        let scale = 1.0 / batch.len() as f64;
        for (b, total) in self.total.iter_mut().enumerate() {
            total.copy_from_slice(&self.partials[0][b]);
            for partial in &self.partials[1..chunks.len()] {
                for (t, p) in total.iter_mut().zip(&partial[b]) {
                    *t += p;
                }
            }
            for t in total.iter_mut() {
                *t *= scale;
            }
        }
        adam_step(&mut model.param_blocks_mut(), &self.total, &mut self.adam)?;
        Ok((loss, hits))
    }
}

/// Mean cross-entropy over a set of samples.
pub fn mean_loss(model: &Model, samples: &[Sample]) -> Result<f64, NnError> {
    let losses = par::map(samples, |s| model.logits(&s.input).map(|z| softmax_cross_entropy(&z, s.class).0));
    let mut sum = 0.0;
    for l in losses {
        sum += l?;
    }
    Ok(sum / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{assign_classes, generate_synthetic, SyntheticConfig};
    use crate::seq::{EncodingMode, GUIDE_LEN};

    fn small_arch() -> ArchitectureConfig {
        ArchitectureConfig { conv_filters: vec![4], dense_units: vec![16], ..Default::default() }
    }

    fn toy_samples() -> Vec<Sample> {
        let recs = generate_synthetic(&SyntheticConfig { n_targets: 8, ..Default::default() }).unwrap();
        let (labeled, _) = assign_classes(&recs, 8).unwrap();
        encode_samples(&labeled, &EncodingWeights::default()).unwrap()
    }

    #[test]
    fn single_step_reduces_batch_loss() {
        let samples = toy_samples();
        let weights = EncodingWeights::default();
        let cfg = TrainConfig { architecture: small_arch(), ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let arch = Architecture::from_config(&cfg.architecture, weights.rows(), 8);
        let mut model = Model::new(arch, weights, cfg.init, &mut rng).unwrap();
        let before = mean_loss(&model, &samples).unwrap();
        let mut trainer = Trainer::new(&model, cfg.adam());
        let all: Vec<usize> = (0..samples.len()).collect();
        trainer.step(&mut model, &samples, &all).unwrap();
        let after = mean_loss(&model, &samples).unwrap();
        assert!(after < before, "{after} !< {before}");
        assert_eq!(trainer.adam_state().t, 1);
    }

    #[test]
    fn same_seed_same_weights() {
        let recs = generate_synthetic(&SyntheticConfig { n_targets: 8, ..Default::default() }).unwrap();
        let (labeled, _) = assign_classes(&recs, 8).unwrap();
        let cfg = TrainConfig { epochs: 2, architecture: small_arch(), ..Default::default() };
        let w = EncodingWeights::default();
        let (a, ha) = train(&labeled, &w, &cfg).unwrap();
        let (b, hb) = train(&labeled, &w, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
        let (c, _) = train(&labeled, &w, &TrainConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_class_is_degenerate() {
        let mut samples = toy_samples();
        for s in &mut samples {
            s.class = 3;
        }
        let w = EncodingWeights::uniform(GUIDE_LEN, EncodingMode::Zip);
        assert!(matches!(train_samples(&samples, &w, &TrainConfig::default()), Err(NnError::DegenerateDataset(_))));
        assert!(matches!(train_samples(&[], &w, &TrainConfig::default()), Err(NnError::DegenerateDataset(_))));
    }

    #[test]
    fn patience_stops_early() {
        let samples = toy_samples();
        let cfg = TrainConfig { epochs: 50, patience: Some(1), lr: 0.5, architecture: small_arch(), ..Default::default() };
        let (_, h) = train_samples(&samples, &EncodingWeights::default(), &cfg).unwrap();
        assert!(h.stopped_early);
        assert!(h.epochs.len() < 50);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { epochs: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }
}
