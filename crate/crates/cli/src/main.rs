//! `guide-guard`: train, evaluate and run the Cas13 guide screening model.

mod cmd;
mod config;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use guide_guard::analysis::{Aggregator, BaseSide};
use guide_guard::seq::{BasePreset, EncodingMode};

use config::{Overrides, RunConfig};
use exit::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "guide-guard", version, about = "Screen Cas13 guide/target RNA pairs with a convolutional classifier")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// TOML run configuration.
    #[arg(long, global = true, env = "GG_CONFIG")]
    config: Option<PathBuf>,
    /// Seed for training, fold splits and synthesis.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Abort on the first malformed input row.
    #[arg(long, global = true)]
    strict: bool,
    /// Exit with status 5 when any screened pair is rejected.
    #[arg(long, global = true)]
    gate: bool,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Base-weight preset: none, u-boost or gc-boost.
    #[arg(long, global = true)]
    weights: Option<BasePreset>,
    /// Encoding layout: zip or concat.
    #[arg(long, global = true)]
    mode: Option<EncodingMode>,
    /// Drop the positional emphasis (all position weights 1.0).
    #[arg(long, global = true)]
    no_position_emphasis: bool,
    /// Bin efficacy into classes within each gene.
    #[arg(long, global = true)]
    per_gene: bool,
    /// Treat lower efficacy values as better.
    #[arg(long, global = true)]
    invert_efficacy: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic screen with planted position and base effects.
    Synth(SynthArgs),
    /// Efficacy by mismatch position, run, pair and replaced base.
    Analyze(AnalyzeArgs),
    /// Train a model on a screen and save it.
    Train(TrainArgs),
    /// K-fold cross-validation with per-subset metrics and ROC.
    Evaluate(EvaluateArgs),
    /// Score guide/target pairs with a saved model.
    Screen(ScreenArgs),
    /// Time single-input predictions of a saved model.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output file (stdout when omitted).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub targets: Option<usize>,
    /// Mutated guides per target, besides the perfect match.
    #[arg(long)]
    pub guides_per_target: Option<usize>,
    /// Standard deviation of the efficacy noise.
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    pub data: Option<PathBuf>,
    #[arg(short, long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, default_value = "mean")]
    pub aggregator: Aggregator,
    /// Key per-base histograms on the original (target-side) or substituted base.
    #[arg(long, default_value = "original", value_parser = parse_side)]
    pub side: BaseSide,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    pub data: Option<PathBuf>,
    #[arg(short = 'o', long)]
    pub model_out: Option<PathBuf>,
    /// Per-epoch history JSON (defaults to `<model>.history.json`).
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    pub data: Option<PathBuf>,
    #[arg(short, long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(short, long)]
    pub out_dir: Option<PathBuf>,
    /// Also train on all records and save the model here.
    #[arg(long)]
    pub final_model: Option<PathBuf>,
    /// Repeat the evaluation without positional emphasis and with even base weights.
    #[arg(long)]
    pub ablation: bool,
}

#[derive(Args, Debug)]
pub struct ScreenArgs {
    pub model: Option<PathBuf>,
    /// Screen file with guide and target columns.
    #[arg(short, long, conflicts_with_all = ["guide", "target"])]
    pub input: Option<PathBuf>,
    #[arg(long, requires = "target")]
    pub guide: Option<String>,
    #[arg(long, requires = "guide")]
    pub target: Option<String>,
    /// Write results here instead of stdout.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    pub model: Option<PathBuf>,
    /// Number of random pairs to time.
    #[arg(short, long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
}

fn parse_side(s: &str) -> Result<BaseSide, String> {
    match s {
        "original" => Ok(BaseSide::Original),
        "substituted" => Ok(BaseSide::Substituted),
        other => Err(format!("unknown side {other:?} (expected original or substituted)")),
    }
}

/// Settings shared by every command after the config file and flags merge.
pub struct Context {
    pub cfg: RunConfig,
    pub gate: bool,
    pub json: bool,
}

impl Context {
    pub fn data_path(&self, arg: Option<PathBuf>) -> CliResult<PathBuf> {
        arg.or_else(|| self.cfg.paths.data.clone()).ok_or_else(|| CliError::usage("no dataset given (argument or paths.data)"))
    }

    pub fn model_path(&self, arg: Option<PathBuf>) -> CliResult<PathBuf> {
        arg.or_else(|| self.cfg.paths.model.clone()).ok_or_else(|| CliError::usage("no model given (argument or paths.model)"))
    }

    pub fn out_dir(&self, arg: Option<PathBuf>, fallback: &str) -> PathBuf {
        arg.or_else(|| self.cfg.paths.out_dir.clone()).unwrap_or_else(|| PathBuf::from(fallback))
    }
}

fn setup_threads(jobs: Option<usize>) -> CliResult<()> {
    let Some(n) = jobs else { return Ok(()) };
    if n == 0 {
        return Err(CliError::usage("--jobs must be at least 1"));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::io(e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    if n > 1 {
        eprintln!("warning: built without the parallel feature; --jobs {n} ignored");
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<u8> {
    let g = cli.global;
    setup_threads(g.jobs)?;
    let mut cfg = RunConfig::load(g.config.as_deref())?;
    cfg.apply(&Overrides {
        seed: g.seed,
        strict: g.strict,
        weights: g.weights,
        mode: g.mode,
        per_gene: g.per_gene,
        invert_efficacy: g.invert_efficacy,
        no_position_emphasis: g.no_position_emphasis,
    });
    cfg.validate()?;
    let ctx = Context { cfg, gate: g.gate, json: g.json };
    match cli.command {
        Command::Synth(a) => cmd::synth::run(&ctx, a),
        Command::Analyze(a) => cmd::analyze::run(&ctx, a),
        Command::Train(a) => cmd::train::run(&ctx, a),
        Command::Evaluate(a) => cmd::evaluate::run(&ctx, a),
        Command::Screen(a) => cmd::screen::run(&ctx, a),
        Command::Bench(a) => cmd::bench::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_parse_after_subcommand() {
        let cli = Cli::try_parse_from(["guide-guard", "train", "d.csv", "--weights", "gc-boost", "--mode", "concat", "--seed", "9"]).unwrap();
        assert_eq!(cli.global.weights, Some(BasePreset::GcBoost));
        assert_eq!(cli.global.mode, Some(EncodingMode::Concat));
        assert_eq!(cli.global.seed, Some(9));
        assert!(matches!(cli.command, Command::Train(TrainArgs { data: Some(_), .. })));
    }

    #[test]
    fn screen_rejects_input_with_pair() {
        assert!(Cli::try_parse_from(["guide-guard", "screen", "m.gg", "--input", "x.csv", "--guide", "A", "--target", "U"]).is_err());
        assert!(Cli::try_parse_from(["guide-guard", "screen", "m.gg", "--guide", "A"]).is_err());
    }
}
