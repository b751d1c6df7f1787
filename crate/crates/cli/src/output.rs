//! CSV and flat key-value emission.

use std::io::Write;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Kv,
}

/// A result document: either rows under a fixed header or a flat list of
/// key-value pairs.
#[derive(Clone, Debug, PartialEq)]
pub enum Report {
    Table {
        columns: Vec<String>,
        rows: Vec<Vec<String>>,
    },
    Fields(Vec<(String, String)>),
}

impl Report {
    pub fn fields<K: Into<String>>(pairs: impl IntoIterator<Item = (K, String)>) -> Self {
        Report::Fields(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    /// Looks up a field, or a column of the first row.
    pub fn get(&self, key: &str) -> Option<&str> {
        match self {
            Report::Fields(f) => f.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str()),
            Report::Table { columns, rows } => {
                let idx = columns.iter().position(|c| c == key)?;
                rows.first().map(|r| r[idx].as_str())
            }
        }
    }

    pub fn write<W: Write>(&self, format: Format, mut out: W) -> Result<(), CliError> {
        match (self, format) {
            (Report::Table { columns, rows }, Format::Csv) => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(columns).map_err(csv_error)?;
                for row in rows {
                    w.write_record(row).map_err(csv_error)?;
                }
                w.flush()?;
            }
            (Report::Fields(fields), Format::Csv) => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(fields.iter().map(|(k, _)| k))
                    .map_err(csv_error)?;
                w.write_record(fields.iter().map(|(_, v)| v))
                    .map_err(csv_error)?;
                w.flush()?;
            }
            (Report::Fields(fields), Format::Kv) => {
                for (k, v) in fields {
                    writeln!(out, "{k}={v}")?;
                }
            }
            (Report::Table { columns, rows }, Format::Kv) => {
                for (i, row) in rows.iter().enumerate() {
                    if i > 0 {
                        writeln!(out)?;
                    }
                    for (k, v) in columns.iter().zip(row) {
                        writeln!(out, "{k}={v}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e.to_string()))
}

/// Fixed-precision float formatting shared by every command.
pub fn num(v: f64) -> String {
    format!("{v:.6e}")
}
