//! File-system helpers shared by every subcommand.

use std::fs;
use std::path::Path;
use std::process;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::CliError;

/// Reads a whole file, wrapping errors with the path for context.
pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

/// Writes atomically: temp file in the target directory, then rename,
/// so readers never observe a half-written file.
pub fn atomic_write(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CliError::Config(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{name}.{}.tmp", process::id()));
    fs::write(&tmp, contents)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::Config(format!("cannot move {} into place: {e}", path.display()))
    })
}

/// Serializes items one JSON document per line, trailing newline included.
pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serializable record"));
        out.push('\n');
    }
    out
}

/// Parses one JSON document per line, skipping blank lines; errors carry
/// the path, line number, and record kind.
pub fn parse_jsonl<T: DeserializeOwned>(
    text: &str,
    what: &str,
    path: &Path,
) -> Result<Vec<T>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| {
            CliError::Config(format!("{}: line {}: bad {what} record: {e}", path.display(), i + 1))
        })?);
    }
    Ok(out)
}

/// Pretty JSON plus trailing newline, the convention for single-document
/// output files.
pub fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable document");
    text.push('\n');
    text
}
