use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use super::{DatasetError, GuideRecord, LabeledRecord};
use crate::seq::{parse_sequence, parse_sequence_exact, Role, GUIDE_LEN};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnMapping {
    pub guide: String,
    pub target: String,
    pub efficacy: String,
    pub gene: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            guide: "guide".into(),
            target: "target".into(),
            efficacy: "efficacy".into(),
            gene: "gene".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LoadOptions {
    pub columns: ColumnMapping,
    /// Fail on the first bad row instead of counting it.
    pub strict: bool,
    /// Required sequence length; `None` accepts any length.
    pub expected_len: Option<usize>,
    /// Require the efficacy column. Screening inputs have none.
    pub require_efficacy: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            columns: ColumnMapping::default(),
            strict: false,
            expected_len: Some(GUIDE_LEN),
            require_efficacy: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RowError {
    /// 1-indexed line in the source file (the header is line 1).
    pub line: u64,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IngestStats {
    pub rows: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub per_gene: BTreeMap<String, usize>,
    pub perfect_matches: usize,
    pub mismatched: usize,
    /// Count of `T` symbols rewritten to `U` in accepted rows.
    pub t_to_u: usize,
    pub errors: Vec<RowError>,
}

impl fmt::Display for IngestStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows read        {}", self.rows)?;
        writeln!(f, "accepted         {}", self.accepted)?;
        writeln!(f, "rejected         {}", self.rejected)?;
        writeln!(f, "perfect matches  {}", self.perfect_matches)?;
        writeln!(f, "mismatched       {}", self.mismatched)?;
        writeln!(f, "T->U normalized  {}", self.t_to_u)?;
        for (gene, n) in &self.per_gene {
            writeln!(f, "  gene {gene:<10} {n}")?;
        }
        for e in self.errors.iter().take(20) {
            writeln!(f, "  line {}: {}", e.line, e.message)?;
        }
        if self.errors.len() > 20 {
            writeln!(f, "  ... {} more row errors", self.errors.len() - 20)?;
        }
        Ok(())
    }
}

/// Tab if the header contains one, comma otherwise.
pub fn detect_delimiter(header: &str) -> u8 {
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

pub const UNASSIGNED_GENE: &str = "unassigned";

pub fn load_records<R: Read>(mut reader: R, opts: &LoadOptions) -> Result<(Vec<GuideRecord>, IngestStats), DatasetError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let header = text.lines().next().unwrap_or("");
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(detect_delimiter(header))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = csv.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let col = |name: &str| find(name).ok_or_else(|| DatasetError::MissingColumn(name.to_string()));
    let guide_col = col(&opts.columns.guide)?;
    let target_col = col(&opts.columns.target)?;
    let efficacy_col = if opts.require_efficacy {
        Some(col(&opts.columns.efficacy)?)
    } else {
        find(&opts.columns.efficacy)
    };
    let gene_col = find(&opts.columns.gene);

    let mut records = Vec::new();
    let mut stats = IngestStats::default();
    for row in csv.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        stats.rows += 1;
        match parse_row(&row, guide_col, target_col, efficacy_col, gene_col, opts) {
            Ok((record, t_count)) => {
                stats.accepted += 1;
                stats.t_to_u += t_count;
                *stats.per_gene.entry(record.gene.clone()).or_default() += 1;
                if record.is_perfect_match() {
                    stats.perfect_matches += 1;
                } else {
                    stats.mismatched += 1;
                }
                records.push(record);
            }
            Err(message) => {
                if opts.strict {
                    return Err(DatasetError::InvalidRow { line, message });
                }
                stats.rejected += 1;
                stats.errors.push(RowError { line, message });
            }
        }
    }
    Ok((records, stats))
}

fn parse_row(
    row: &csv::StringRecord,
    guide_col: usize,
    target_col: usize,
    efficacy_col: Option<usize>,
    gene_col: Option<usize>,
    opts: &LoadOptions,
) -> Result<(GuideRecord, usize), String> {
    let field = |i: usize, name: &str| row.get(i).ok_or_else(|| format!("missing field {name:?}"));
    let guide_text = field(guide_col, "guide")?;
    let target_text = field(target_col, "target")?;
    let parse = |text: &str, role| match opts.expected_len {
        Some(n) => parse_sequence_exact(text, role, n),
        None => parse_sequence(text, role),
    };
    let guide = parse(guide_text, Role::Guide).map_err(|e| format!("guide: {e}"))?;
    let target = parse(target_text, Role::Target).map_err(|e| format!("target: {e}"))?;
    let efficacy = match efficacy_col {
        Some(i) => {
            let raw = field(i, "efficacy")?;
            raw.parse::<f64>().map_err(|_| format!("efficacy {raw:?} is not a number"))?
        }
        None => 0.0,
    };
    let gene = gene_col
        .and_then(|i| row.get(i))
        .filter(|g| !g.is_empty())
        .unwrap_or(UNASSIGNED_GENE);
    let t_count = [guide_text, target_text]
        .iter()
        .map(|t| t.chars().filter(|c| matches!(c, 'T' | 't')).count())
        .sum();
    let record = GuideRecord::new(guide, target, efficacy, gene).map_err(|e| e.to_string())?;
    Ok((record, t_count))
}

pub fn load_records_path(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<(Vec<GuideRecord>, IngestStats), DatasetError> {
    load_records(File::open(path)?, opts)
}

/// Writes records in the ingestion format (comma separated). With labels,
/// a trailing `class_id` column is added.
pub fn write_records<W: Write>(writer: W, records: &[GuideRecord], labels: Option<&[LabeledRecord]>) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(writer);
    if labels.is_some() {
        w.write_record(["guide", "target", "efficacy", "gene", "class_id"])?;
    } else {
        w.write_record(["guide", "target", "efficacy", "gene"])?;
    }
    for (i, r) in records.iter().enumerate() {
        let guide = r.guide.to_string();
        let target = r.target.to_string();
        let efficacy = r.efficacy.to_string();
        match labels {
            Some(l) => w.write_record([&guide, &target, &efficacy, &r.gene, &l[i].class_id.to_string()])?,
            None => w.write_record([&guide, &target, &efficacy, &r.gene])?,
        }
    }
    w.flush()?;
    Ok(())
}
