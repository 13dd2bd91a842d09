//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use guide_guard::seq::{Nucleotide, Role, Sequence};
use rand::Rng;

pub const FD_STEP: f64 = 1e-5;

/// Central differences of `f` at `x`, one coordinate at a time.
pub fn numeric_grad(x: &mut [f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + FD_STEP;
        let plus = f(x);
        x[i] = orig - FD_STEP;
        let minus = f(x);
        x[i] = orig;
        g[i] = (plus - minus) / (2.0 * FD_STEP);
    }
    g
}

/// Largest `|a - n| / max(|a|, |n|, 1e-6)` over the pairs.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

/// Fraction of (positive, negative) pairs ranked correctly, ties count half.
pub fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                num += 1.0;
            } else if scores[i] == scores[j] {
                num += 0.5;
            }
        }
    }
    num / pairs
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn random_sequence<R: Rng>(rng: &mut R, len: usize, role: Role) -> Sequence {
    Sequence::new((0..len).map(|_| Nucleotide::ALL[rng.random_range(0..4)]).collect(), role)
}

pub fn uniform_vec<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}
