//! CSV emission with a `#` comment header.

use std::io::Write;
use std::path::Path;

use crate::error::CliError;

pub const TOOL_VERSION: &str = concat!("wvsim ", env!("CARGO_PKG_VERSION"));

/// Seventeen significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// In-memory table; written in one go after all computation completes.
#[derive(Debug, Clone, Default)]
pub struct Table {
    header_comments: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    footer_comments: Vec<String>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            ..Self::default()
        }
    }

    pub fn set_columns(&mut self, columns: Vec<String>) {
        self.columns = columns;
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        self.header_comments.push(line.into());
    }

    pub fn footer(&mut self, line: impl Into<String>) {
        self.footer_comments.push(line.into());
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        for line in &self.header_comments {
            writeln!(buf, "# {line}")?;
        }
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut buf);
            w.write_record(&self.columns).map_err(csv_err)?;
            for row in &self.rows {
                w.write_record(row.iter().map(|x| fmt_num(*x)))
                    .map_err(csv_err)?;
            }
            w.flush()?;
        }
        for line in &self.footer_comments {
            writeln!(buf, "# {line}")?;
        }
        Ok(buf)
    }

    pub fn write_to(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}
