//! Output sinks. CSV tables start with `#key=value` lines describing the run.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use nlcalc_core::io::{write_field_csv, write_nlf};
use nlcalc_core::GridField;

use crate::args::FieldFormat;
use crate::error::CliError;

/// Ordered `key=value` pairs written at the top of every table.
#[derive(Debug, Clone, Default)]
pub struct Stamp(Vec<(String, String)>);

impl Stamp {
    pub fn new(command: &str) -> Self {
        let mut s = Stamp(Vec::new());
        s.set("command", command);
        s.set("version", env!("CARGO_PKG_VERSION"));
        s
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    fn write(&self, w: &mut dyn Write) -> io::Result<()> {
        for (k, v) in &self.0 {
            writeln!(w, "#{k}={v}")?;
        }
        Ok(())
    }
}

pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn write(&self, stamp: &Stamp, w: &mut dyn Write) -> io::Result<()> {
        stamp.write(w)?;
        writeln!(w, "{}", self.header.join(","))?;
        for r in &self.rows {
            writeln!(w, "{}", r.join(","))?;
        }
        w.flush()
    }

    /// Writes to `path`, or to standard output when absent.
    pub fn save(&self, stamp: &Stamp, path: Option<&Path>) -> Result<(), CliError> {
        match path {
            Some(p) => {
                let mut w = BufWriter::new(create(p)?);
                self.write(stamp, &mut w)?;
            }
            None => {
                let stdout = io::stdout();
                let mut w = stdout.lock();
                self.write(stamp, &mut w)?;
            }
        }
        Ok(())
    }
}

/// Formats a number with the shortest representation that reads back exactly,
/// switching to exponent notation outside `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn create(p: &Path) -> Result<File, CliError> {
    File::create(p).map_err(|e| CliError::Validation(format!("cannot write {}: {e}", p.display())))
}

pub fn save_field(field: &GridField, stamp: &Stamp, path: &Path, format: FieldFormat) -> Result<(), CliError> {
    let mut w = BufWriter::new(create(path)?);
    match format {
        FieldFormat::Nlf => write_nlf(&mut w, field)?,
        FieldFormat::Csv => {
            stamp.write(&mut w)?;
            write_field_csv(&mut w, field)?;
        }
    }
    w.flush()?;
    Ok(())
}
