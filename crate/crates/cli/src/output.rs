//! Atomic file output and CSV formatting.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::Value;
use smms::json::{format_float, to_string_pretty};

use crate::CliError;

/// Writes `contents` to `dir/name` through a sibling temporary file and a
/// rename, so readers never observe a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, &target)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::Io(format!("cannot write {}: {e}", target.display()))
    })?;
    Ok(target)
}

pub fn write_json(dir: &Path, name: &str, v: &Value) -> Result<PathBuf, CliError> {
    write_atomic(dir, name, &to_string_pretty(v))
}

/// CSV cell for a float: 17 significant digits, `nan`/`inf` otherwise.
pub fn cell(x: f64) -> String {
    if x.is_finite() {
        format_float(x)
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| cell(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_fixed_digits() {
        let text = csv(&["a", "b"], &[vec![0.5, f64::NAN], vec![1.0, f64::NEG_INFINITY]]);
        assert_eq!(text, "a,b\n5.0000000000000000e-1,nan\n1.0000000000000000e0,-inf\n");
    }

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_atomic(dir.path(), "x.txt", "hello").unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "hello");
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }
}
