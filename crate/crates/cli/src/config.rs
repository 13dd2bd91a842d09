//! The run configuration file (TOML). Every field has a default, so an empty
//! file is valid; unknown keys are rejected.

use std::path::{Path, PathBuf};

use guide_guard::dataset::{ColumnMapping, LabelOptions, LoadOptions, SyntheticConfig};
use guide_guard::nn::TrainConfig;
use guide_guard::seq::{default_position_weights, BasePreset, EncodingMode, EncodingWeights, GUIDE_LEN};
use serde::{Deserialize, Serialize};

use crate::exit::{CliError, CliResult};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub encoding: EncodingBlock,
    pub dataset: DatasetBlock,
    pub training: TrainConfig,
    pub eval: EvalBlock,
    pub synth: SyntheticConfig,
    pub paths: PathsBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingBlock {
    pub mode: EncodingMode,
    pub base_weights: BasePreset,
    /// Apply the default emphasis at positions 18 and 5.
    pub position_emphasis: bool,
    /// Explicit per-position weights; overrides `position_emphasis`.
    pub position_weights: Option<Vec<f64>>,
}

impl Default for EncodingBlock {
    fn default() -> Self {
        EncodingBlock { mode: EncodingMode::Zip, base_weights: BasePreset::UBoost, position_emphasis: true, position_weights: None }
    }
}

impl EncodingBlock {
    pub fn weights(&self) -> EncodingWeights {
        let position_weights = match &self.position_weights {
            Some(w) => w.clone(),
            None if self.position_emphasis => default_position_weights(GUIDE_LEN),
            None => vec![1.0; GUIDE_LEN],
        };
        EncodingWeights { position_weights, base_weights: self.base_weights.weights(), mode: self.mode }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetBlock {
    pub n_classes: usize,
    pub per_gene: bool,
    pub invert_efficacy: bool,
    pub strict: bool,
    pub columns: ColumnsBlock,
}

impl Default for DatasetBlock {
    fn default() -> Self {
        DatasetBlock { n_classes: 8, per_gene: false, invert_efficacy: false, strict: false, columns: ColumnsBlock::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnsBlock {
    pub guide: String,
    pub target: String,
    pub efficacy: String,
    pub gene: String,
}

impl Default for ColumnsBlock {
    fn default() -> Self {
        let m = ColumnMapping::default();
        ColumnsBlock { guide: m.guide, target: m.target, efficacy: m.efficacy, gene: m.gene }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalBlock {
    pub k: usize,
    /// Seed for the fold split.
    pub seed: u64,
}

impl Default for EvalBlock {
    fn default() -> Self {
        EvalBlock { k: 20, seed: 42 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsBlock {
    /// Dataset used when a command is given no data argument.
    pub data: Option<PathBuf>,
    /// Model used by `screen` and `bench` when no model argument is given,
    /// and written by `train` when no `--model-out` is given.
    pub model: Option<PathBuf>,
    /// Output directory for `analyze` and `evaluate`.
    pub out_dir: Option<PathBuf>,
}

/// Command-line switches that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub strict: bool,
    pub weights: Option<BasePreset>,
    pub mode: Option<EncodingMode>,
    pub per_gene: bool,
    pub invert_efficacy: bool,
    pub no_position_emphasis: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::usage(format!("invalid config: {e}")))
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(format!("cannot read config {}: {e}", p.display())))?;
                Self::from_toml(&text)
            }
            None => Ok(RunConfig::default()),
        }
    }

    /// Applies overrides; `--seed` sets the training, split and synthesis
    /// seeds together.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.training.seed = seed;
            self.eval.seed = seed;
            self.synth.seed = seed;
        }
        self.dataset.strict |= o.strict;
        self.dataset.per_gene |= o.per_gene;
        self.dataset.invert_efficacy |= o.invert_efficacy;
        if let Some(w) = o.weights {
            self.encoding.base_weights = w;
        }
        if let Some(m) = o.mode {
            self.encoding.mode = m;
        }
        if o.no_position_emphasis {
            self.encoding.position_emphasis = false;
            self.encoding.position_weights = None;
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.encoding.weights().validate().map_err(|e| CliError::usage(format!("encoding: {e}")))?;
        if self.encoding.weights().seq_len() != GUIDE_LEN {
            return Err(CliError::usage(format!("encoding.position_weights must have {GUIDE_LEN} entries")));
        }
        if self.training.n_classes != self.dataset.n_classes {
            return Err(CliError::usage(format!(
                "training.n_classes ({}) and dataset.n_classes ({}) disagree",
                self.training.n_classes, self.dataset.n_classes
            )));
        }
        self.training.validate().map_err(|e| CliError::usage(format!("training: {e}")))?;
        if self.eval.k < 2 {
            return Err(CliError::usage("eval.k must be at least 2"));
        }
        Ok(())
    }

    pub fn load_options(&self, require_efficacy: bool) -> LoadOptions {
        let c = &self.dataset.columns;
        LoadOptions {
            columns: ColumnMapping { guide: c.guide.clone(), target: c.target.clone(), efficacy: c.efficacy.clone(), gene: c.gene.clone() },
            strict: self.dataset.strict,
            expected_len: Some(GUIDE_LEN),
            require_efficacy,
        }
    }

    pub fn label_options(&self) -> LabelOptions {
        LabelOptions { n_classes: self.dataset.n_classes, per_gene: self.dataset.per_gene, invert_efficacy: self.dataset.invert_efficacy }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.encoding.weights(), EncodingWeights::default());
        assert_eq!(cfg.eval.k, 20);
        cfg.validate().unwrap();
    }

    #[test]
    fn example_file_spells_out_the_defaults() {
        let cfg = RunConfig::from_toml(include_str!("../guide-guard.example.toml")).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml("[training]\nepochz = 3\n").unwrap_err();
        assert_eq!(err.code, crate::exit::USAGE);
        assert!(RunConfig::from_toml("[nope]\n").is_err());
    }

    #[test]
    fn blocks_parse() {
        let cfg = RunConfig::from_toml(
            "[encoding]\nmode = \"concat\"\nbase_weights = \"gc-boost\"\nposition_emphasis = false\n\
             [dataset]\nper_gene = true\n[training]\nepochs = 3\n[training.architecture]\nconv_filters = [4, 2]\n\
             [eval]\nk = 5\n[synth]\nn_targets = 8\n",
        )
        .unwrap();
        let w = cfg.encoding.weights();
        assert_eq!(w.mode, EncodingMode::Concat);
        assert_eq!(w.base_weights, BasePreset::GcBoost.weights());
        assert!(w.position_weights.iter().all(|&x| x == 1.0));
        assert!(cfg.dataset.per_gene);
        assert_eq!(cfg.training.epochs, 3);
        assert_eq!(cfg.training.architecture.conv_filters, vec![4, 2]);
        assert_eq!((cfg.eval.k, cfg.synth.n_targets), (5, 8));
    }

    #[test]
    fn overrides_win() {
        let mut cfg = RunConfig::default();
        cfg.apply(&Overrides { seed: Some(3), weights: Some(BasePreset::None), no_position_emphasis: true, ..Overrides::default() });
        assert_eq!((cfg.training.seed, cfg.eval.seed, cfg.synth.seed), (3, 3, 3));
        assert_eq!(cfg.encoding.weights(), EncodingWeights::uniform(GUIDE_LEN, EncodingMode::Zip));
    }

    #[test]
    fn bad_values_fail_validation() {
        let cfg = RunConfig::from_toml("[encoding]\nposition_weights = [1.0, 2.0]\n").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = RunConfig::from_toml("[eval]\nk = 1\n").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = RunConfig::from_toml("[training]\nn_classes = 4\n").unwrap();
        assert!(cfg.validate().is_err());
    }
}
