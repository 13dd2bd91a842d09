//! Planted-effect screen simulator.
//!
//! Each target contributes one perfect-match guide followed by
//! `guides_per_target` mutants carrying 1-3 substitutions (consecutive or
//! scattered). Efficacy is
//!
//! ```text
//! base_level - sum over mismatches of position_effect[p] * base_effect[original base] + noise
//! ```
//!
//! With `balanced` set, targets are drawn in quartets whose aligned bases are
//! cyclic shifts of one another (A->C->G->U->A) and share the same mutation
//! patterns, so every pattern is observed against all four original bases.
//! Per-position means then depend on the position effect alone, which makes
//! the planted profile exactly recoverable from noise-free data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DatasetError, GuideRecord};
use crate::seq::{reverse_complement, BaseWeights, Nucleotide, Role, Sequence, GUIDE_LEN};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_targets: usize,
    /// Mutated guides per target, in addition to the perfect match.
    pub guides_per_target: usize,
    pub seq_len: usize,
    /// Penalty per mismatch at each 1-indexed position (`position_effect[p - 1]`).
    pub position_effect: Vec<f64>,
    /// Multiplier on the penalty, keyed by the original (target-side) base.
    pub base_effect: BaseWeights,
    pub base_level: f64,
    pub noise_sd: f64,
    pub seed: u64,
    pub genes: Vec<String>,
    pub balanced: bool,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_targets: 400,
            guides_per_target: 7,
            seq_len: GUIDE_LEN,
            position_effect: default_position_effect(GUIDE_LEN),
            base_effect: BaseWeights { a: 1.0, c: 1.5, g: 1.5, u: 0.5 },
            base_level: 1.0,
            noise_sd: 0.0,
            seed: 7,
            genes: vec!["CD46".into(), "CD55".into(), "CD71".into()],
            balanced: true,
        }
    }
}

/// Two Gaussian bumps over a floor: a strong one at position 18 and a weaker
/// one at position 5.
pub fn default_position_effect(len: usize) -> Vec<f64> {
    let bump = |p: f64, center: f64, height: f64, width: f64| height * (-(p - center).powi(2) / (2.0 * width * width)).exp();
    (1..=len)
        .map(|p| {
            let p = p as f64;
            0.2 + bump(p, 18.0, 1.0, 1.5) + bump(p, 5.0, 0.6, 1.0)
        })
        .collect()
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: &str| Err(DatasetError::BadSyntheticConfig(m.to_string()));
        if self.seq_len < 3 {
            return bad("seq_len must be at least 3");
        }
        if self.position_effect.len() != self.seq_len {
            return bad("position_effect must have one entry per position");
        }
        if self.position_effect.iter().chain(&self.base_effect.as_array()).any(|v| !v.is_finite()) {
            return bad("effects must be finite");
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return bad("noise_sd must be finite and non-negative");
        }
        if !self.base_level.is_finite() {
            return bad("base_level must be finite");
        }
        if self.genes.is_empty() {
            return bad("at least one gene tag is required");
        }
        Ok(())
    }
}

/// Noise-free penalty for a set of mismatches.
pub fn planted_penalty(cfg: &SyntheticConfig, positions: &[usize], originals: &[Nucleotide]) -> f64 {
    positions
        .iter()
        .zip(originals)
        .map(|(&p, &b)| cfg.position_effect[p - 1] * cfg.base_effect.get(b))
        .sum()
}

/// 0-indexed positions and per-position channel shifts (1..=3) of one mutant.
struct Pattern {
    positions: Vec<usize>,
    shifts: Vec<usize>,
}

fn draw_pattern(rng: &mut ChaCha8Rng, len: usize) -> Pattern {
    let count = rng.random_range(1..=3usize);
    let positions = if count > 1 && rng.random_bool(0.5) {
        let start = rng.random_range(0..=len - count);
        (start..start + count).collect()
    } else {
        let mut picked = rand::seq::index::sample(rng, len, count).into_vec();
        picked.sort_unstable();
        picked
    };
    let shifts = positions.iter().map(|_| rng.random_range(1..=3usize)).collect();
    Pattern { positions, shifts }
}

fn shift(base: Nucleotide, by: usize) -> Nucleotide {
    Nucleotide::ALL[(base.channel() + by) % 4]
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Vec<GuideRecord>, DatasetError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = if cfg.noise_sd > 0.0 {
        Some(Normal::new(0.0, cfg.noise_sd).map_err(|e| DatasetError::BadSyntheticConfig(e.to_string()))?)
    } else {
        None
    };
    let block = if cfg.balanced { 4 } else { 1 };
    let mut out = Vec::with_capacity(cfg.n_targets * (cfg.guides_per_target + 1));

    let mut t = 0;
    while t < cfg.n_targets {
        let root: Vec<Nucleotide> = (0..cfg.seq_len).map(|_| Nucleotide::ALL[rng.random_range(0..4usize)]).collect();
        let patterns: Vec<Pattern> = (0..cfg.guides_per_target).map(|_| draw_pattern(&mut rng, cfg.seq_len)).collect();
        for member in 0..block.min(cfg.n_targets - t) {
            let aligned: Vec<Nucleotide> = root.iter().map(|&b| shift(b, member)).collect();
            let target = reverse_complement(&Sequence::new(aligned.clone(), Role::Target));
            let gene = &cfg.genes[t % cfg.genes.len()];

            let mut emit = |guide: Vec<Nucleotide>, rng: &mut ChaCha8Rng| -> Result<(), DatasetError> {
                let guide = Sequence::new(guide, Role::Guide);
                let mut record = GuideRecord::new(guide, target.clone(), 0.0, gene.clone())?;
                let p = record.profile();
                let mut eff = cfg.base_level - planted_penalty(cfg, &p.positions, &p.originals);
                if let Some(n) = &noise {
                    eff += n.sample(rng);
                }
                record.efficacy = eff;
                out.push(record);
                Ok(())
            };

            emit(aligned.clone(), &mut rng)?;
            for pat in &patterns {
                let mut guide = aligned.clone();
                for (&p, &s) in pat.positions.iter().zip(&pat.shifts) {
                    guide[p] = shift(guide[p], s);
                }
                emit(guide, &mut rng)?;
            }
            t += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(noise_sd: f64) -> SyntheticConfig {
        SyntheticConfig { n_targets: 8, guides_per_target: 5, noise_sd, ..Default::default() }
    }

    #[test]
    fn block_layout() {
        let cfg = SyntheticConfig { guides_per_target: 10, ..small(0.0) };
        let recs = generate_synthetic(&cfg).unwrap();
        assert_eq!(recs.len(), 8 * 11);
        for block in recs.chunks(11) {
            assert!(block[0].is_perfect_match());
            assert!(block[1..].iter().all(|r| (1..=3).contains(&r.profile().len())));
            assert!(block.iter().all(|r| r.target == block[0].target));
        }
    }

    #[test]
    fn zero_effects_give_flat_efficacy() {
        let cfg = SyntheticConfig {
            position_effect: vec![0.0; GUIDE_LEN],
            ..small(0.0)
        };
        let recs = generate_synthetic(&cfg).unwrap();
        assert!(recs.iter().all(|r| r.efficacy == cfg.base_level));
    }

    #[test]
    fn position_18_hurts_more_than_position_1() {
        let cfg = SyntheticConfig::default();
        for b in Nucleotide::ALL {
            assert!(planted_penalty(&cfg, &[18], &[b]) > planted_penalty(&cfg, &[1], &[b]));
        }
        let effect = &cfg.position_effect;
        let argmax = (0..GUIDE_LEN).max_by(|&a, &b| effect[a].total_cmp(&effect[b])).unwrap();
        assert_eq!(argmax + 1, 18);
        assert!(effect[4] > effect[2] && effect[4] > effect[7]);
    }

    #[test]
    fn deterministic_under_seed() {
        assert_eq!(generate_synthetic(&small(0.3)).unwrap(), generate_synthetic(&small(0.3)).unwrap());
        let other = SyntheticConfig { seed: 8, ..small(0.3) };
        assert_ne!(generate_synthetic(&small(0.3)).unwrap(), generate_synthetic(&other).unwrap());
    }

    #[test]
    fn quartets_cover_all_original_bases() {
        let recs = generate_synthetic(&small(0.0)).unwrap();
        let per_target = 6;
        for quartet in recs.chunks(4 * per_target) {
            for j in 1..per_target {
                let mut seen: Vec<Vec<Nucleotide>> = (0..4).map(|m| quartet[m * per_target + j].profile().originals.clone()).collect();
                let positions = quartet[j].profile().positions.clone();
                for m in 0..4 {
                    assert_eq!(quartet[m * per_target + j].profile().positions, positions);
                }
                for k in 0..positions.len() {
                    let mut bases: Vec<_> = seen.iter_mut().map(|o| o[k]).collect();
                    bases.sort();
                    assert_eq!(bases, Nucleotide::ALL.to_vec());
                }
            }
        }
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = SyntheticConfig { noise_sd: -1.0, ..Default::default() };
        assert!(generate_synthetic(&cfg).is_err());
        let cfg = SyntheticConfig { position_effect: vec![1.0; 3], ..Default::default() };
        assert!(generate_synthetic(&cfg).is_err());
    }
}
