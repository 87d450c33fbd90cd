//! Result tables and their CSV form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rbxe::constants::CONSTANTS_VERSION;

use crate::error::{Result, SweepError};

/// A swept column and whether its grid is logarithmic.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisColumn {
    pub column: String,
    pub log: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub scenario: String,
    pub config_hash: String,
    /// Only written when set; never part of the hash.
    pub timestamp: Option<String>,
    pub axes: Vec<AxisColumn>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ResultTable {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| {
            SweepError::UnknownParameter {
                name: name.to_string(),
                suggestions: crate::config::suggest(name, self.columns.iter().map(|s| s.as_str())),
            }
        })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Shortest round-trip text, switching to exponent form for very large or
/// small magnitudes.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 {
        "0".into()
    } else if (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_csv<W: Write>(table: &ResultTable, mut out: W) -> Result<()> {
    let meta = |out: &mut W, k: &str, v: &str| -> std::io::Result<()> {
        writeln!(out, "# {k}: {v}")
    };
    let io = |e: std::io::Error| SweepError::Csv(e.into());
    meta(&mut out, "scenario", &table.scenario).map_err(io)?;
    meta(&mut out, "config_sha256", &table.config_hash).map_err(io)?;
    meta(&mut out, "constants_version", CONSTANTS_VERSION).map_err(io)?;
    meta(
        &mut out,
        "generator",
        concat!("rbxe-sweep ", env!("CARGO_PKG_VERSION")),
    )
    .map_err(io)?;
    if let Some(ts) = &table.timestamp {
        meta(&mut out, "timestamp", ts).map_err(io)?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|&x| format_value(x)))?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| SweepError::io(path, e))?;
    let mut buf = BufWriter::new(file);
    write_csv(table, &mut buf).map_err(|e| match e {
        SweepError::Csv(c) if c.is_io_error() => match c.into_kind() {
            csv::ErrorKind::Io(io) => SweepError::io(path, io),
            _ => unreachable!(),
        },
        other => other,
    })?;
    buf.flush().map_err(|e| SweepError::io(path, e))
}
