//! Output plumbing: fixed-precision number rendering, atomic file writes,
//! and the stdout-or-file sink every subcommand shares.

use std::io::{self, Write};
use std::path::Path;

/// Renders a value with 12 significant digits: plain decimal inside a
/// readable magnitude window, scientific notation outside it. The mapping
/// is deterministic, so identical inputs always produce identical bytes.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&magnitude) {
        format!("{x:.11e}")
    } else {
        let decimals = (11 - magnitude).max(0) as usize;
        format!("{x:.decimals$}")
    }
}

/// Renders an optional cut-off for a CSV cell: the number, or empty.
pub fn cutoff_cell(cutoff: Option<u32>) -> String {
    cutoff.map(|t| t.to_string()).unwrap_or_default()
}

/// Writes through a sibling temp file plus rename, so an interrupted or
/// failed run never leaves a partial output file behind.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!("{name}.tmp"));
    let result = std::fs::write(&tmp, contents).and_then(|()| std::fs::rename(&tmp, path));
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

/// Sends finished output to a file (atomically) or to stdout.
pub fn emit(output: Option<&Path>, contents: &str) -> io::Result<()> {
    match output {
        Some(path) => write_atomic(path, contents),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            out.flush()
        }
    }
}
