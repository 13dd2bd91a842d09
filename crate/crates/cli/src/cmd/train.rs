//! `train`: fit a model on a whole screen and save it.

use std::path::PathBuf;

use guide_guard::dataset::ClassBoundaries;
use guide_guard::nn::{model_to_bytes, train, TrainHistory};
use serde::Serialize;

use super::{hex, load_screen, outln, write_file, write_stdout};
use crate::exit::{CliResult, OK};
use crate::{Context, TrainArgs};

const DEFAULT_MODEL: &str = "guide-guard.model";

#[derive(Serialize)]
struct Report<'a> {
    records: usize,
    parameters: usize,
    model: String,
    checksum: String,
    history_file: String,
    history: &'a TrainHistory,
}

#[derive(Serialize)]
struct HistoryFile<'a> {
    history: &'a TrainHistory,
    class_boundaries: &'a std::collections::BTreeMap<String, ClassBoundaries>,
}

pub fn run(ctx: &Context, args: TrainArgs) -> CliResult<u8> {
    let data = ctx.data_path(args.data)?;
    let records = load_screen(ctx, &data, true)?;
    let (labeled, bounds) = guide_guard::dataset::assign_classes_with(&records, &ctx.cfg.label_options())?;
    let mut cfg = ctx.cfg.training.clone();
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    cfg.validate()?;
    let weights = ctx.cfg.encoding.weights();
    let (model, history) = train(&labeled, &weights, &cfg)?;

    let model_path = args.model_out.or_else(|| ctx.cfg.paths.model.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_MODEL));
    let history_path = args.history.unwrap_or_else(|| {
        let mut p = model_path.clone().into_os_string();
        p.push(".history.json");
        PathBuf::from(p)
    });
    let bytes = model_to_bytes(&model);
    write_file(&model_path, &bytes)?;
    let hist = HistoryFile { history: &history, class_boundaries: &bounds };
    write_file(&history_path, serde_json::to_string_pretty(&hist)? + "\n")?;

    let report = Report {
        records: labeled.len(),
        parameters: model.num_params(),
        model: model_path.display().to_string(),
        checksum: hex(&bytes[bytes.len() - 32..]),
        history_file: history_path.display().to_string(),
        history: &history,
    };
    if ctx.json {
        outln!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for e in &history.epochs {
            eprintln!("epoch {:>3}  loss {:.5}  acc {:.4}", e.epoch, e.mean_loss, e.accuracy);
        }
        write_stdout(model.summary())?;
        let last = history.epochs.last();
        outln!("trained on {} records, {} parameters, {} epochs{}", report.records, report.parameters, history.epochs.len(), if history.stopped_early { " (stopped early)" } else { "" });
        if let Some(e) = last {
            outln!("final loss {:.5}, running accuracy {:.4}", e.mean_loss, e.accuracy);
        }
        outln!("model    {} (sha256 {})", report.model, report.checksum);
        outln!("history  {}", report.history_file);
    }
    Ok(OK)
}
