//! Artifact formatting and atomic file writes.

use std::fs;
use std::io;
use std::path::Path;

/// Floats in CSV artifacts carry 17 significant digits so values round-trip
/// exactly.
pub fn fmt_float(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.16e}"),
        Some(_) => "nan".to_string(),
        None => "nan".to_string(),
    }
}

/// Write through a temp file and rename, so readers never observe a
/// half-written artifact.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}
