//! `analyze`: efficacy histograms and the pairwise heatmap as CSV.

use guide_guard::analysis::{analyze_all, AnalysisOptions};
use guide_guard::seq::{Nucleotide, GUIDE_LEN};
use serde::Serialize;

use super::{load_screen, outln, write_file};
use crate::exit::{CliResult, OK};
use crate::{AnalyzeArgs, Context};

#[derive(Serialize)]
struct Report<'a> {
    summary: &'a guide_guard::analysis::AnalysisSummary,
    aggregator: &'static str,
    /// Single-mismatch positions ordered from lowest to highest efficacy.
    weakest_single_positions: Vec<usize>,
    /// Pair of positions with the lowest efficacy, if any pair was seen.
    weakest_pair: Option<(usize, usize)>,
    files: Vec<String>,
}

pub fn run(ctx: &Context, args: AnalyzeArgs) -> CliResult<u8> {
    let data = ctx.data_path(args.data)?;
    let records = load_screen(ctx, &data, true)?;
    let opts = AnalysisOptions { seq_len: GUIDE_LEN, aggregator: args.aggregator, side: args.side };
    let set = analyze_all(&records, &opts);
    let dir = ctx.out_dir(args.out_dir, "analysis");

    let mut outputs: Vec<(String, String)> = vec![
        ("single.csv".into(), set.single.to_csv()),
        ("consecutive2.csv".into(), set.consecutive_2.to_csv()),
        ("consecutive3.csv".into(), set.consecutive_3.to_csv()),
        ("pairwise.csv".into(), set.pairwise.to_csv()),
    ];
    for (base, hist) in Nucleotide::ALL.iter().zip(&set.per_base) {
        outputs.push((format!("per_base_{}.csv", base.as_char()), hist.to_csv()));
    }
    outputs.push(("analysis_long.csv".into(), set.to_long_csv()));
    outputs.push(("summary.json".into(), serde_json::to_string_pretty(&set.summary)? + "\n"));
    for (name, body) in &outputs {
        write_file(&dir.join(name), body)?;
    }

    let mut ranked: Vec<_> = set.single.bins.iter().filter_map(|b| b.value.map(|v| (b.position, v))).collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let report = Report {
        summary: &set.summary,
        aggregator: args.aggregator.name(),
        weakest_single_positions: ranked.iter().map(|r| r.0).collect(),
        weakest_pair: set.pairwise.min_cell().map(|c| (c.i, c.j)),
        files: outputs.iter().map(|(n, _)| dir.join(n).display().to_string()).collect(),
    };
    if ctx.json {
        outln!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        let s = &set.summary;
        outln!("records            {}", s.records);
        outln!("perfect matches    {}", s.perfect_matches);
        outln!("single mismatch    {}", s.single);
        outln!("2-run / 3-run      {} / {}", s.consecutive_2, s.consecutive_3);
        outln!("two mismatches     {}", s.pairs);
        outln!("other              {}", s.unmatched);
        let top: Vec<String> = ranked.iter().take(3).map(|(p, v)| format!("{p} ({v:.4})")).collect();
        outln!("weakest positions  {}", if top.is_empty() { "none".into() } else { top.join(", ") });
        if let Some((i, j)) = report.weakest_pair {
            outln!("weakest pair       ({i}, {j})");
        }
        outln!("wrote {} files to {}", outputs.len(), dir.display());
    }
    Ok(OK)
}
