//! CSV formatting and atomic file output.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Seventeen significant digits: enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Render a CSV table of floats with a header row.
pub fn csv_table(header: &[&str], columns: &[&[f64]]) -> String {
    let n = columns.first().map_or(0, |c| c.len());
    let mut out = String::with_capacity(32 * n * columns.len().max(1));
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..n {
        for (j, col) in columns.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{:.16e}", col[i]).expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    out
}

/// Write `contents` to `path` through a temporary file in the same
/// directory, renamed into place once fully written.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
