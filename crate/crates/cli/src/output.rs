//! Report rendering and atomic file output.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use ebicert::report::{KeyValues, Table, REPORT_SCHEMA};

use crate::error::CliError;

/// A report body: `key: value` fields and an optional named table.
#[derive(Debug, Default)]
pub struct Report {
    pub fields: KeyValues,
    pub table: Option<(String, Table)>,
}

impl Report {
    /// Everything after the two header lines. Deterministic for a given
    /// configuration.
    pub fn body(&self) -> String {
        let mut out = self.fields.to_string();
        if let Some((name, table)) = &self.table {
            out.push('\n');
            out.push_str(&format!("table: {name}\n"));
            out.push_str(&table.to_string());
        }
        out
    }

    /// Schema line, timestamp line, body.
    pub fn render(&self, generated_unix: u64) -> String {
        format!("{REPORT_SCHEMA}\ngenerated-unix: {generated_unix}\n{}", self.body())
    }
}

pub fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Writes to a temporary file in the target directory and renames it over
/// `path`, so readers never observe a partial report.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}
