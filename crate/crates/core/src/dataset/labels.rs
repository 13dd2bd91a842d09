use std::collections::BTreeMap;

use serde::Serialize;

use super::{DatasetError, GuideRecord};

/// A record with its efficacy class. The top class is the positive one.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledRecord {
    pub record: GuideRecord,
    pub class_id: usize,
    pub is_positive: bool,
}

/// Efficacy range covered by each class, lowest class first.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassBoundaries {
    pub n_classes: usize,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub sizes: Vec<usize>,
}

impl ClassBoundaries {
    /// Lowest efficacy that still lands in the positive class.
    pub fn positive_cutoff(&self) -> f64 {
        self.min[self.n_classes - 1]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelOptions {
    pub n_classes: usize,
    /// Bin within each gene instead of over the pooled dataset.
    pub per_gene: bool,
    /// Treat lower efficacy as better.
    pub invert_efficacy: bool,
}

impl Default for LabelOptions {
    fn default() -> Self {
        LabelOptions { n_classes: 8, per_gene: false, invert_efficacy: false }
    }
}

/// Equal-count quantile classes. Records are ranked by `(efficacy, index)`
/// and rank `r` of `n` lands in class `floor(r * k / n)`, so class sizes
/// differ by at most one and ties straddling a boundary send the earlier
/// record to the lower class.
pub fn class_ids(efficacies: &[f64], n_classes: usize) -> Result<(Vec<usize>, ClassBoundaries), DatasetError> {
    if n_classes < 2 {
        return Err(DatasetError::BadClassCount(n_classes));
    }
    let n = efficacies.len();
    if n < n_classes {
        return Err(DatasetError::TooFewRecords { needed: n_classes, got: n });
    }
    if let Some(&bad) = efficacies.iter().find(|e| !e.is_finite()) {
        return Err(DatasetError::NonFiniteEfficacy(bad));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| efficacies[a].total_cmp(&efficacies[b]).then(a.cmp(&b)));

    let mut ids = vec![0; n];
    let mut bounds = ClassBoundaries {
        n_classes,
        min: vec![f64::INFINITY; n_classes],
        max: vec![f64::NEG_INFINITY; n_classes],
        sizes: vec![0; n_classes],
    };
    for (rank, &idx) in order.iter().enumerate() {
        let class = rank * n_classes / n;
        ids[idx] = class;
        let e = efficacies[idx];
        bounds.min[class] = bounds.min[class].min(e);
        bounds.max[class] = bounds.max[class].max(e);
        bounds.sizes[class] += 1;
    }
    Ok((ids, bounds))
}

/// Pooled octile labeling.
pub fn assign_classes(records: &[GuideRecord], n_classes: usize) -> Result<(Vec<LabeledRecord>, ClassBoundaries), DatasetError> {
    let (labeled, mut bounds) = assign_classes_with(
        records,
        &LabelOptions { n_classes, per_gene: false, invert_efficacy: false },
    )?;
    Ok((labeled, bounds.remove(POOLED).expect("pooled boundaries")))
}

const POOLED: &str = "all";

/// Labeling with per-gene binning and efficacy inversion. Boundaries are
/// keyed by gene, or by `"all"` for pooled binning; with inversion they are
/// reported on the negated scale used for ranking.
pub fn assign_classes_with(
    records: &[GuideRecord],
    opts: &LabelOptions,
) -> Result<(Vec<LabeledRecord>, BTreeMap<String, ClassBoundaries>), DatasetError> {
    let sign = if opts.invert_efficacy { -1.0 } else { 1.0 };
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let key = if opts.per_gene { r.gene.clone() } else { POOLED.to_string() };
        groups.entry(key).or_default().push(i);
    }
    if groups.is_empty() {
        return Err(DatasetError::TooFewRecords { needed: opts.n_classes, got: 0 });
    }
    let mut class_of = vec![0; records.len()];
    let mut bounds = BTreeMap::new();
    for (key, members) in groups {
        let eff: Vec<f64> = members.iter().map(|&i| sign * records[i].efficacy).collect();
        let (ids, b) = class_ids(&eff, opts.n_classes)?;
        for (&i, c) in members.iter().zip(ids) {
            class_of[i] = c;
        }
        bounds.insert(key, b);
    }
    let top = opts.n_classes - 1;
    let labeled = records
        .iter()
        .zip(class_of)
        .map(|(r, class_id)| LabeledRecord { record: r.clone(), class_id, is_positive: class_id == top })
        .collect();
    Ok((labeled, bounds))
}
