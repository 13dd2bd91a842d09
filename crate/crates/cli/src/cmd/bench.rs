//! `bench`: single-input prediction latency of a saved model.

use guide_guard::eval::benchmark_latency;
use guide_guard::nn::load_model;
use guide_guard::seq::{encode_pair, Nucleotide, Role, Sequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{outln, write_stdout};
use crate::exit::{CliError, CliResult, OK};
use crate::{BenchArgs, Context};

pub fn run(ctx: &Context, args: BenchArgs) -> CliResult<u8> {
    if args.n == 0 {
        return Err(CliError::usage("--n must be at least 1"));
    }
    let model_path = ctx.model_path(args.model)?;
    let model = load_model(&model_path).map_err(|e| CliError::model(format!("{}: {e}", model_path.display())))?;
    let len = model.encoding().seq_len();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.training.seed);
    let mut random = |role| Sequence::new((0..len).map(|_| Nucleotide::ALL[rng.random_range(0..4usize)]).collect(), role);
    let inputs = (0..args.n)
        .map(|_| {
            let g = random(Role::Guide);
            let t = random(Role::Target);
            encode_pair(&g, &t, model.encoding())
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::input(e.to_string()))?;
    let report = benchmark_latency(&model, &inputs, args.reps)?;
    if ctx.json {
        outln!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        write_stdout(model.summary())?;
        write_stdout(report.to_string())?;
    }
    Ok(OK)
}
