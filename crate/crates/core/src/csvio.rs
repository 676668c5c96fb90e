//! Small line-oriented CSV helpers shared by the file formats.
//!
//! Floats are written with `{}` (shortest representation that parses back to
//! the same `f64`), so every format round-trips bit-exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub(crate) fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub(crate) fn parse_f64(field: &str, path: &Path, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| parse_error(path, line, format!("invalid number `{field}`")))
}

/// Comment lines before the header, and data rows as (line number, fields).
pub(crate) type Table<'a> = (Vec<&'a str>, Vec<(usize, Vec<&'a str>)>);

/// Parses a CSV with an exact expected header into rows of fields. Lines
/// starting with `#` before the header are returned separately.
pub(crate) fn read_table<'a>(
    text: &'a str,
    header: &str,
    path: &Path,
) -> Result<Table<'a>> {
    let mut comments = Vec::new();
    let mut rows = Vec::new();
    let mut seen_header = false;
    let width = header.split(',').count();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let ln = i + 1;
        if line.is_empty() {
            continue;
        }
        if !seen_header {
            if line.starts_with('#') {
                comments.push(line);
                continue;
            }
            if line != header {
                return Err(parse_error(path, ln, format!("expected header `{header}`, found `{line}`")));
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(parse_error(
                path,
                ln,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        rows.push((ln, fields));
    }
    if !seen_header {
        return Err(parse_error(path, 1, format!("missing header `{header}`")));
    }
    Ok((comments, rows))
}

/// `time,velocity` rows, shared by onset lists and strike lists.
pub fn write_time_velocity<I>(pairs: I) -> String
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut out = String::from("time,velocity\n");
    for (t, v) in pairs {
        out.push_str(&format!("{t},{v}\n"));
    }
    out
}

pub fn read_time_velocity(text: &str, path: &Path) -> Result<Vec<(f64, f64)>> {
    let (_, rows) = read_table(text, "time,velocity", path)?;
    rows.into_iter()
        .map(|(ln, f)| Ok((parse_f64(f[0], path, ln)?, parse_f64(f[1], path, ln)?)))
        .collect()
}

/// Writes via a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("not a file path: {}", path.display())))?;
    let mut tmp = PathBuf::from(dir);
    tmp.push(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
