//! `screen`: score pairs with a saved model.

use std::fmt::Write as _;
use std::time::Instant;

use guide_guard::dataset::{load_records_path, GuideRecord, LoadOptions};
use guide_guard::nn::{input_tensor, load_model, Model};
use guide_guard::predict_batch;
use guide_guard::seq::{encode_pair, parse_sequence_exact, Role};
use serde::Serialize;

use super::{report_ingest, write_file, write_stdout};
use crate::exit::{CliError, CliResult, GATE, OK};
use crate::{Context, ScreenArgs};

#[derive(Serialize)]
struct Row {
    index: usize,
    guide: String,
    target: String,
    class: usize,
    probabilities: Vec<f64>,
    verdict: &'static str,
}

fn verdict(positive: bool) -> &'static str {
    if positive {
        "ACCEPT"
    } else {
        "REJECT"
    }
}

fn pair_from_args(model: &Model, guide: &str, target: &str) -> CliResult<GuideRecord> {
    let len = model.encoding().seq_len();
    let g = parse_sequence_exact(guide, Role::Guide, len).map_err(|e| CliError::input(format!("guide: {e}")))?;
    let t = parse_sequence_exact(target, Role::Target, len).map_err(|e| CliError::input(format!("target: {e}")))?;
    Ok(GuideRecord::new(g, t, 0.0, "unassigned")?)
}

pub fn run(ctx: &Context, args: ScreenArgs) -> CliResult<u8> {
    let model_path = ctx.model_path(args.model)?;
    let model = load_model(&model_path).map_err(|e| CliError::model(format!("{}: {e}", model_path.display())))?;
    if !model.fingerprint_matches(&ctx.cfg.encoding.weights()) {
        eprintln!("note: scoring with the encoding stored in the model, which differs from the configured one");
    }

    let records = match (&args.input, &args.guide, &args.target) {
        (Some(path), _, _) => {
            let base = ctx.cfg.load_options(false);
            let opts = LoadOptions { expected_len: Some(model.encoding().seq_len()), ..base };
            let (records, stats) = load_records_path(path, &opts).map_err(|e| CliError::from(e).context(path.display()))?;
            report_ingest(path, &stats);
            records
        }
        (None, Some(g), Some(t)) => vec![pair_from_args(&model, g, t)?],
        _ => return Err(CliError::usage("give --input FILE or --guide and --target")),
    };

    let start = Instant::now();
    let tensors = records
        .iter()
        .map(|r| encode_pair(&r.guide, &r.target, model.encoding()).map(|e| input_tensor(&e)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::input(e.to_string()))?;
    let predictions = predict_batch(&model, &tensors)?;
    let elapsed = start.elapsed().as_secs_f64();

    let rows: Vec<Row> = records
        .iter()
        .zip(&predictions)
        .enumerate()
        .map(|(index, (r, p))| Row {
            index,
            guide: r.guide.to_string(),
            target: r.target.to_string(),
            class: p.class,
            probabilities: p.probabilities.clone(),
            verdict: verdict(p.is_positive),
        })
        .collect();

    let body = if ctx.json {
        serde_json::to_string_pretty(&rows)? + "\n"
    } else {
        let mut s = String::from("index,guide,target,class");
        for c in 0..model.n_classes() {
            let _ = write!(s, ",p{c}");
        }
        s.push_str(",verdict\n");
        for r in &rows {
            let _ = write!(s, "{},{},{},{}", r.index, r.guide, r.target, r.class);
            for p in &r.probabilities {
                let _ = write!(s, ",{p}");
            }
            let _ = writeln!(s, ",{}", r.verdict);
        }
        s
    };
    match &args.out {
        Some(path) => write_file(path, body)?,
        None => write_stdout(body)?,
    }

    let rejected = rows.iter().filter(|r| r.verdict == "REJECT").count();
    eprintln!(
        "screened {} pairs in {:.4} s: {} ACCEPT, {} REJECT",
        rows.len(),
        elapsed,
        rows.len() - rejected,
        rejected
    );
    Ok(if ctx.gate && rejected > 0 { GATE } else { OK })
}
