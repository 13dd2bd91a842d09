//! `synth`: planted synthetic screens.


use guide_guard::dataset::{generate_synthetic, write_records};
use serde::Serialize;

use super::{outln, write_file, write_stdout};
use crate::exit::{CliResult, OK};
use crate::{Context, SynthArgs};

#[derive(Serialize)]
struct Summary {
    records: usize,
    targets: usize,
    guides_per_target: usize,
    perfect_matches: usize,
    noise_sd: f64,
    seed: u64,
    /// 1-indexed positions with the largest planted penalty, strongest first.
    strongest_positions: Vec<usize>,
}

pub fn run(ctx: &Context, args: SynthArgs) -> CliResult<u8> {
    let mut cfg = ctx.cfg.synth.clone();
    if let Some(n) = args.targets {
        cfg.n_targets = n;
    }
    if let Some(n) = args.guides_per_target {
        cfg.guides_per_target = n;
    }
    if let Some(sd) = args.noise {
        cfg.noise_sd = sd;
    }
    let records = generate_synthetic(&cfg)?;

    let mut buf = Vec::new();
    write_records(&mut buf, &records, None)?;
    match &args.out {
        Some(path) => write_file(path, &buf)?,
        None => write_stdout(&buf)?,
    }

    let mut order: Vec<usize> = (0..cfg.position_effect.len()).collect();
    order.sort_by(|&a, &b| cfg.position_effect[b].total_cmp(&cfg.position_effect[a]));
    let summary = Summary {
        records: records.len(),
        targets: cfg.n_targets,
        guides_per_target: cfg.guides_per_target,
        perfect_matches: records.iter().filter(|r| r.is_perfect_match()).count(),
        noise_sd: cfg.noise_sd,
        seed: cfg.seed,
        strongest_positions: order.iter().take(3).map(|p| p + 1).collect(),
    };
    if ctx.json && args.out.is_some() {
        outln!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        eprintln!(
            "synthesized {} records: {} targets x (1 perfect + {} mutated), noise sd {}, seed {}; strongest planted positions {:?}",
            summary.records, summary.targets, summary.guides_per_target, summary.noise_sd, summary.seed, summary.strongest_positions
        );
    }
    Ok(OK)
}
