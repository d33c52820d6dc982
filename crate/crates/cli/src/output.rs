use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

/// CSV line prefix carrying the config fingerprint.
pub const FINGERPRINT_PREFIX: &str = "# fingerprint: ";

/// Buffered writer to `path`, or stdout.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::usage(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

pub fn out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))
}

/// Starts a CSV: fingerprint comment, then the header.
pub fn csv_head(w: &mut dyn Write, fingerprint: &str, header: &[String]) -> io::Result<()> {
    writeln!(w, "{FINGERPRINT_PREFIX}{fingerprint}")?;
    writeln!(w, "{}", header.join(","))
}

/// Shortest round-trip form, switching to exponent notation far from 1.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn csv_row(w: &mut dyn Write, row: &[f64]) -> io::Result<()> {
    let cells: Vec<String> = row.iter().map(|v| num(*v)).collect();
    writeln!(w, "{}", cells.join(","))
}

/// Writes `body` as pretty JSON with a trailing newline.
pub fn json<T: Serialize>(mut w: impl Write, body: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut w, body)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
