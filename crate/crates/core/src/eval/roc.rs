use std::fmt::Write as _;

use serde::Serialize;

use super::EvalError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RocPoint {
    /// Scores at or above this value are called positive.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    /// Two-column `fpr,tpr` export.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{}", p.fpr, p.tpr);
        }
        out
    }
}

/// Sweeps every distinct score as a threshold, highest first. Tied scores
/// move the curve diagonally, which is what counts a tied
/// positive/negative pair as half-ordered. The area is accumulated in
/// integer counts and divided once.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<RocCurve, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch { scores: scores.len(), labels: labels.len() });
    }
    if let Some(&s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore(s));
    }
    let pos = labels.iter().filter(|&&l| l).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClassInput);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint { threshold: f64::INFINITY, fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0u64, 0u64);
    // twice the area, in units of one (positive, negative) pair
    let mut area2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += u128::from(fp - fp0) * u128::from(tp + tp0);
        points.push(RocPoint { threshold, fpr: fp as f64 / neg as f64, tpr: tp as f64 / pos as f64 });
    }
    let auc = area2 as f64 / (2.0 * pos as f64 * neg as f64);
    Ok(RocCurve { points, auc })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_case() {
        let roc = roc_auc(&[0.9, 0.8, 0.7, 0.1], &[true, false, true, false]).unwrap();
        assert_eq!(roc.auc, 0.75);
        let pts: Vec<(f64, f64)> = roc.points.iter().map(|p| (p.fpr, p.tpr)).collect();
        assert_eq!(pts, vec![(0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (0.5, 1.0), (1.0, 1.0)]);
    }

    #[test]
    fn perfect_and_tied() {
        assert_eq!(roc_auc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap().auc, 1.0);
        assert_eq!(roc_auc(&[0.3; 6], &[true, false, true, false, false, true]).unwrap().auc, 0.5);
    }

    #[test]
    fn errors() {
        assert!(matches!(roc_auc(&[0.1, 0.2], &[true, true]), Err(EvalError::SingleClassInput)));
        assert!(matches!(roc_auc(&[0.1], &[true, false]), Err(EvalError::LengthMismatch { .. })));
        assert!(matches!(roc_auc(&[f64::NAN, 0.2], &[true, false]), Err(EvalError::NonFiniteScore(_))));
    }

    #[test]
    fn csv_export() {
        let roc = roc_auc(&[0.9, 0.1], &[true, false]).unwrap();
        assert_eq!(roc.to_csv(), "fpr,tpr\n0,0\n0,1\n1,1\n");
    }
}
