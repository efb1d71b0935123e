//! CSV writing and number formatting shared by the commands.

use std::fs;
use std::path::Path;

use crate::CliError;

/// Shortest round-trip text for a float; empty for an undefined value.
pub fn num(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(CliError::io(format!("cannot create {}", dir.display())))
}

/// Writes a header and rows to `path`, creating parent directories.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    let context = format!("cannot write {}", path.display());
    let to_err = |e: csv::Error| CliError::Io { context: context.clone(), source: e.into() };
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(row).map_err(to_err)?;
    }
    w.flush().map_err(CliError::io(context.clone()))
}

pub fn write_text(path: &Path, text: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    fs::write(path, text).map_err(CliError::io(format!("cannot write {}", path.display())))
}
