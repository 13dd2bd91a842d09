//! Process exit codes and the error type that carries them.

use std::fmt;

use guide_guard::analysis::AnalysisError;
use guide_guard::dataset::DatasetError;
use guide_guard::eval::EvalError;
use guide_guard::nn::NnError;

pub const OK: u8 = 0;
/// I/O failures and anything unclassified.
pub const FAILURE: u8 = 1;
/// Bad command line or configuration file.
pub const USAGE: u8 = 2;
/// Unusable input data: malformed rows, wrong lengths, degenerate labels.
pub const INPUT: u8 = 3;
/// Unreadable, corrupt, or incompatible model file.
pub const MODEL: u8 = 4;
/// `--gate` was set and at least one input was rejected.
pub const GATE: u8 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(FAILURE, message)
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(USAGE, message)
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(INPUT, message)
    }

    pub fn model(message: impl Into<String>) -> Self {
        Self::new(MODEL, message)
    }

    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::io(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io(_) => CliError::io(e.to_string()),
            DatasetError::BadSyntheticConfig(_) | DatasetError::BadK { .. } => CliError::usage(e.to_string()),
            _ => CliError::input(e.to_string()),
        }
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::Io(_) => CliError::io(e.to_string()),
            NnError::InvalidConfig(_) | NnError::InvalidArchitecture(_) => CliError::usage(e.to_string()),
            NnError::DegenerateDataset(_) | NnError::Seq(_) => CliError::input(e.to_string()),
            NnError::CorruptFile(_) | NnError::VersionMismatch { .. } | NnError::ShapeMismatch(_) | NnError::NonFinite(_) => {
                CliError::model(e.to_string())
            }
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Nn(n) => n.into(),
            EvalError::Fold { fold, source } => CliError::from(source).context(format!("fold {fold}")),
            EvalError::Dataset(d) => d.into(),
            other => CliError::input(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::usage(e.to_string())
    }
}
