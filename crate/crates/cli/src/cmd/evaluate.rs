//! `evaluate`: k-fold cross-validation reports.

use std::fmt::Write as _;

use guide_guard::dataset::LabeledRecord;
use guide_guard::eval::{cross_validate, EvalReport};
use guide_guard::nn::{save_model, train, TrainConfig};
use guide_guard::seq::{BasePreset, EncodingWeights};
use serde::Serialize;

use super::{label, load_screen, outln, write_file, write_stdout};
use crate::exit::{CliError, CliResult, OK};
use crate::{Context, EvaluateArgs};

#[derive(Serialize)]
struct AblationRow {
    variant: &'static str,
    binary_accuracy: f64,
    multiclass_accuracy: f64,
    auc: f64,
}

fn predictions_csv(labeled: &[LabeledRecord], report: &EvalReport) -> String {
    let mut out = String::from("index,fold,guide,target,gene,efficacy,perfect_match,true_class,predicted_class,actual_positive,predicted_positive,score\n");
    for p in &report.predictions {
        let r = &labeled[p.index];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            p.index,
            p.fold,
            r.record.guide,
            r.record.target,
            r.record.gene,
            r.record.efficacy,
            r.record.is_perfect_match(),
            p.true_class,
            p.predicted_class,
            r.is_positive,
            p.predicted_positive,
            p.score
        );
    }
    out
}

fn ablation(labeled: &[LabeledRecord], base: &EncodingWeights, cfg: &TrainConfig, k: usize, seed: u64, first: &EvalReport) -> CliResult<Vec<AblationRow>> {
    let row = |variant, r: &EvalReport| AblationRow { variant, binary_accuracy: r.binary_accuracy, multiclass_accuracy: r.multiclass_accuracy, auc: r.roc.auc };
    let mut rows = vec![row("configured", first)];
    let flat = EncodingWeights { position_weights: vec![1.0; base.seq_len()], ..base.clone() };
    let even = EncodingWeights { base_weights: BasePreset::None.weights(), ..base.clone() };
    for (name, w) in [("no-position-emphasis", flat), ("even-base-weights", even)] {
        eprintln!("ablation: {name}");
        rows.push(row(name, &cross_validate(labeled, &w, cfg, k, seed)?));
    }
    Ok(rows)
}

pub fn run(ctx: &Context, args: EvaluateArgs) -> CliResult<u8> {
    let data = ctx.data_path(args.data)?;
    let records = load_screen(ctx, &data, true)?;
    let labeled = label(ctx, &records)?;
    let k = args.k.unwrap_or(ctx.cfg.eval.k);
    if k < 2 {
        return Err(CliError::usage("--k must be at least 2"));
    }
    let mut cfg = ctx.cfg.training.clone();
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    cfg.validate()?;
    let weights = ctx.cfg.encoding.weights();
    let seed = ctx.cfg.eval.seed;
    let report = cross_validate(&labeled, &weights, &cfg, k, seed)?;

    let dir = ctx.out_dir(args.out_dir, "evaluation");
    write_file(&dir.join("report.txt"), report.to_string())?;
    write_file(&dir.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    write_file(&dir.join("roc.csv"), report.roc.to_csv())?;
    write_file(&dir.join("predictions.csv"), predictions_csv(&labeled, &report))?;

    let rows = if args.ablation { Some(ablation(&labeled, &weights, &cfg, k, seed, &report)?) } else { None };
    if let Some(rows) = &rows {
        let mut txt = format!("{:<24}{:>12}{:>12}{:>10}\n", "variant", "accuracy", "8-class", "AUC");
        for r in rows {
            let _ = writeln!(txt, "{:<24}{:>12.4}{:>12.4}{:>10.4}", r.variant, r.binary_accuracy, r.multiclass_accuracy, r.auc);
        }
        write_file(&dir.join("ablation.txt"), &txt)?;
        write_file(&dir.join("ablation.json"), serde_json::to_string_pretty(rows)? + "\n")?;
        if !ctx.json {
            outln!("{txt}");
        }
    }

    if let Some(path) = &args.final_model {
        let (model, _) = train(&labeled, &weights, &cfg)?;
        save_model(&model, path).map_err(|e| CliError::from(e).context(path.display()))?;
        eprintln!("final model written to {}", path.display());
    }

    if ctx.json {
        #[derive(Serialize)]
        struct Out<'a> {
            n_records: usize,
            k: usize,
            binary_accuracy: f64,
            multiclass_accuracy: f64,
            auc: f64,
            perfect_match: &'a guide_guard::eval::SubsetMetrics,
            mismatch: &'a guide_guard::eval::SubsetMetrics,
            overall: &'a guide_guard::eval::SubsetMetrics,
            ablation: Option<&'a Vec<AblationRow>>,
        }
        let out = Out {
            n_records: report.n_records,
            k: report.k,
            binary_accuracy: report.binary_accuracy,
            multiclass_accuracy: report.multiclass_accuracy,
            auc: report.roc.auc,
            perfect_match: &report.perfect_match,
            mismatch: &report.mismatch,
            overall: &report.overall,
            ablation: rows.as_ref(),
        };
        outln!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        write_stdout(report.to_string())?;
        outln!("wrote report.txt, report.json, roc.csv, predictions.csv to {}", dir.display());
    }
    Ok(OK)
}
