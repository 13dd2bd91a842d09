//! One module per subcommand, plus the loading and writing they share.

pub mod analyze;
pub mod bench;
pub mod evaluate;
pub mod screen;
pub mod synth;
pub mod train;

use std::path::Path;

use guide_guard::dataset::{assign_classes_with, load_records_path, GuideRecord, IngestStats, LabeledRecord};

use crate::exit::{CliError, CliResult};
use crate::Context;

/// Row errors listed on stderr before the rest are summarized.
const SHOWN_ROW_ERRORS: usize = 10;

pub fn report_ingest(path: &Path, stats: &IngestStats) {
    eprintln!(
        "{}: {} rows, {} accepted, {} rejected, {} T->U conversions",
        path.display(),
        stats.rows,
        stats.accepted,
        stats.rejected,
        stats.t_to_u
    );
    for e in stats.errors.iter().take(SHOWN_ROW_ERRORS) {
        eprintln!("  line {}: {}", e.line, e.message);
    }
    if stats.errors.len() > SHOWN_ROW_ERRORS {
        eprintln!("  ... {} more", stats.errors.len() - SHOWN_ROW_ERRORS);
    }
}

pub fn load_screen(ctx: &Context, path: &Path, require_efficacy: bool) -> CliResult<Vec<GuideRecord>> {
    let (records, stats) =
        load_records_path(path, &ctx.cfg.load_options(require_efficacy)).map_err(|e| CliError::from(e).context(path.display()))?;
    report_ingest(path, &stats);
    if records.is_empty() {
        return Err(CliError::input(format!("{}: no usable records", path.display())));
    }
    Ok(records)
}

pub fn label(ctx: &Context, records: &[GuideRecord]) -> CliResult<Vec<LabeledRecord>> {
    Ok(assign_classes_with(records, &ctx.cfg.label_options())?.0)
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes to stdout; a closed reader (`| head`) ends output quietly.
pub fn write_stdout(bytes: impl AsRef<[u8]>) -> CliResult<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(bytes.as_ref()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

/// `println!` that goes through [`write_stdout`].
macro_rules! outln {
    ($($arg:tt)*) => {
        $crate::cmd::write_stdout(format!("{}\n", format_args!($($arg)*)))?
    };
}
pub(crate) use outln;
