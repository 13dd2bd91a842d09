//! Efficacy grouped by mismatch pattern: single-mismatch position, runs of
//! two or three consecutive mismatches, arbitrary mismatch pairs, and single
//! mismatches split by the replaced base.
//!
//! Bins with no records carry `value: None`; they are never zero-filled.
//! Output is ordered by position so exports are byte-stable.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::GuideRecord;
use crate::seq::{Nucleotide, GUIDE_LEN};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("run length must be 2 or 3, got {0}")]
    BadRunLength(usize),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    #[default]
    Mean,
    Median,
}

impl Aggregator {
    pub fn name(self) -> &'static str {
        match self {
            Aggregator::Mean => "mean",
            Aggregator::Median => "median",
        }
    }

    fn apply(self, values: &mut [f64]) -> Option<f64> {
        if values.is_empty() {
            return None;
        }
        Some(match self {
            Aggregator::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregator::Median => {
                values.sort_by(f64::total_cmp);
                let n = values.len();
                if n % 2 == 1 {
                    values[n / 2]
                } else {
                    0.5 * (values[n / 2 - 1] + values[n / 2])
                }
            }
        })
    }
}

impl FromStr for Aggregator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(Aggregator::Mean),
            "median" => Ok(Aggregator::Median),
            other => Err(format!("unknown aggregator {other:?}")),
        }
    }
}

/// Which base a per-nucleotide histogram keys on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseSide {
    /// The target-side base that the guide fails to pair with.
    #[default]
    Original,
    /// The base the guide carries at the mismatch.
    Substituted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub seq_len: usize,
    pub aggregator: Aggregator,
    pub side: BaseSide,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { seq_len: GUIDE_LEN, aggregator: Aggregator::Mean, side: BaseSide::Original }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositionBin {
    /// 1-indexed position (first mismatch for runs).
    pub position: usize,
    pub value: Option<f64>,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositionHistogram {
    pub filter: String,
    pub aggregator: Aggregator,
    pub bins: Vec<PositionBin>,
    /// Records that matched the filter.
    pub matched: usize,
    /// Records that did not.
    pub ignored: usize,
}

impl PositionHistogram {
    pub fn to_csv(&self) -> String {
        let mut out = format!("position,{},count\n", self.aggregator.name());
        for b in &self.bins {
            let _ = writeln!(out, "{},{},{}", b.position, fmt_value(b.value), b.count);
        }
        out
    }

    pub fn values(&self) -> Vec<Option<f64>> {
        self.bins.iter().map(|b| b.value).collect()
    }
}

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn histogram<'a>(
    filter: String,
    n_bins: usize,
    records: &'a [GuideRecord],
    opts: &AnalysisOptions,
    key: impl Fn(&'a GuideRecord) -> Option<usize>,
) -> PositionHistogram {
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
    let mut matched = 0;
    for r in records {
        if r.guide.len() != opts.seq_len {
            continue;
        }
        if let Some(pos) = key(r) {
            groups[pos - 1].push(r.efficacy);
            matched += 1;
        }
    }
    let bins = groups
        .iter_mut()
        .enumerate()
        .map(|(i, g)| PositionBin { position: i + 1, count: g.len(), value: opts.aggregator.apply(g) })
        .collect();
    PositionHistogram { filter, aggregator: opts.aggregator, bins, matched, ignored: records.len() - matched }
}

/// Records with exactly one mismatch, grouped by its position.
pub fn single_mismatch_histogram(records: &[GuideRecord], opts: &AnalysisOptions) -> PositionHistogram {
    histogram("single".into(), opts.seq_len, records, opts, |r| {
        let p = r.profile();
        (p.len() == 1).then(|| p.positions[0])
    })
}

/// Records whose mismatches are exactly `run_length` consecutive positions,
/// grouped by the first one.
pub fn consecutive_mismatch_histogram(records: &[GuideRecord], run_length: usize, opts: &AnalysisOptions) -> Result<PositionHistogram, AnalysisError> {
    if !(2..=3).contains(&run_length) {
        return Err(AnalysisError::BadRunLength(run_length));
    }
    Ok(histogram(
        format!("consecutive-{run_length}"),
        opts.seq_len + 1 - run_length,
        records,
        opts,
        |r| {
            let p = r.profile();
            (p.len() == run_length && p.is_consecutive_run()).then(|| p.positions[0])
        },
    ))
}

/// Single-mismatch records whose replaced base (per `opts.side`) is `base`.
pub fn per_nucleotide_histogram(records: &[GuideRecord], base: Nucleotide, opts: &AnalysisOptions) -> PositionHistogram {
    let side = opts.side;
    let label = match side {
        BaseSide::Original => "original",
        BaseSide::Substituted => "substituted",
    };
    histogram(format!("single-{label}-{base}"), opts.seq_len, records, opts, move |r| {
        let p = r.profile();
        let b = match side {
            BaseSide::Original => p.originals.first(),
            BaseSide::Substituted => p.substituted.first(),
        };
        (p.len() == 1 && b == Some(&base)).then(|| p.positions[0])
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairCell {
    pub i: usize,
    pub j: usize,
    pub value: Option<f64>,
    pub count: usize,
}

/// Upper-triangular `(i < j)` table; the lower triangle and diagonal are not
/// stored.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairHeatmap {
    pub seq_len: usize,
    pub aggregator: Aggregator,
    pub cells: Vec<PairCell>,
    pub matched: usize,
    pub ignored: usize,
}

impl PairHeatmap {
    fn index(n: usize, i: usize, j: usize) -> usize {
        // cells for rows 1..i-1 precede row i
        let before: usize = (1..i).map(|r| n - r).sum();
        before + (j - i - 1)
    }

    pub fn cell(&self, i: usize, j: usize) -> Option<&PairCell> {
        (1 <= i && i < j && j <= self.seq_len).then(|| &self.cells[Self::index(self.seq_len, i, j)])
    }

    /// Populated cell with the lowest value.
    pub fn min_cell(&self) -> Option<&PairCell> {
        self.cells
            .iter()
            .filter(|c| c.value.is_some())
            .min_by(|a, b| a.value.unwrap().total_cmp(&b.value.unwrap()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("i,j,{},count\n", self.aggregator.name());
        for c in &self.cells {
            let _ = writeln!(out, "{},{},{},{}", c.i, c.j, fmt_value(c.value), c.count);
        }
        out
    }
}

/// Records with exactly two mismatches at any positions `i < j`.
pub fn pairwise_mismatch_heatmap(records: &[GuideRecord], opts: &AnalysisOptions) -> PairHeatmap {
    let n = opts.seq_len;
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); n * (n - 1) / 2];
    let mut matched = 0;
    for r in records {
        let p = r.profile();
        if r.guide.len() != n || p.len() != 2 {
            continue;
        }
        groups[PairHeatmap::index(n, p.positions[0], p.positions[1])].push(r.efficacy);
        matched += 1;
    }
    let mut cells = Vec::with_capacity(groups.len());
    let mut g = groups.iter_mut();
    for i in 1..=n {
        for j in i + 1..=n {
            let values = g.next().expect("one group per cell");
            cells.push(PairCell { i, j, count: values.len(), value: opts.aggregator.apply(values) });
        }
    }
    PairHeatmap { seq_len: n, aggregator: opts.aggregator, cells, matched, ignored: records.len() - matched }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisSummary {
    pub records: usize,
    pub perfect_matches: usize,
    pub single: usize,
    pub consecutive_2: usize,
    pub consecutive_3: usize,
    pub pairs: usize,
    /// Records matching none of the filters above.
    pub unmatched: usize,
}

/// Every analysis at once.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisSet {
    pub single: PositionHistogram,
    pub consecutive_2: PositionHistogram,
    pub consecutive_3: PositionHistogram,
    pub pairwise: PairHeatmap,
    pub per_base: Vec<PositionHistogram>,
    pub summary: AnalysisSummary,
}

pub fn analyze_all(records: &[GuideRecord], opts: &AnalysisOptions) -> AnalysisSet {
    let single = single_mismatch_histogram(records, opts);
    let consecutive_2 = consecutive_mismatch_histogram(records, 2, opts).expect("valid run length");
    let consecutive_3 = consecutive_mismatch_histogram(records, 3, opts).expect("valid run length");
    let pairwise = pairwise_mismatch_heatmap(records, opts);
    let per_base = Nucleotide::ALL.iter().map(|&b| per_nucleotide_histogram(records, b, opts)).collect();
    let perfect_matches = records.iter().filter(|r| r.is_perfect_match()).count();
    let unmatched = records
        .iter()
        .filter(|r| {
            let p = r.profile();
            !(p.is_empty() || p.len() == 1 || p.len() == 2 || (p.len() == 3 && p.is_consecutive_run()))
        })
        .count();
    let summary = AnalysisSummary {
        records: records.len(),
        perfect_matches,
        single: single.matched,
        consecutive_2: consecutive_2.matched,
        consecutive_3: consecutive_3.matched,
        pairs: pairwise.matched,
        unmatched,
    };
    AnalysisSet { single, consecutive_2, consecutive_3, pairwise, per_base, summary }
}

impl AnalysisSet {
    /// Long-format table (`analysis,x,y,value,count`) for external plotting;
    /// `y` is empty for one-dimensional analyses.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("analysis,x,y,value,count\n");
        let hists = [&self.single, &self.consecutive_2, &self.consecutive_3].into_iter().chain(&self.per_base);
        for h in hists {
            for b in &h.bins {
                let _ = writeln!(out, "{},{},,{},{}", h.filter, b.position, fmt_value(b.value), b.count);
            }
        }
        for c in &self.pairwise.cells {
            let _ = writeln!(out, "pairwise,{},{},{},{}", c.i, c.j, fmt_value(c.value), c.count);
        }
        out
    }
}
