//! CSV and JSON writers. Numbers use Rust's shortest round-trip formatting,
//! so output does not depend on locale.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Rows of a table; every cell is already formatted.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }

    /// Array of objects; cells that parse as numbers are emitted as numbers.
    fn to_json(&self) -> serde_json::Value {
        let records = self
            .rows
            .iter()
            .map(|r| {
                let obj = self
                    .header
                    .iter()
                    .zip(r)
                    .map(|(h, v)| {
                        let value = match v.parse::<f64>() {
                            Ok(x) if x.is_finite() => serde_json::json!(x),
                            _ => serde_json::json!(v),
                        };
                        (h.to_string(), value)
                    })
                    .collect::<serde_json::Map<_, _>>();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(records)
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub struct Writer {
    pub dir: PathBuf,
    pub format: Format,
    pub written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: &Path, format: Format) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    /// Writes `stem.csv` or `stem.json` depending on the format.
    pub fn table(&mut self, stem: &str, table: &Table) -> Result<(), CliError> {
        match self.format {
            Format::Csv => self.write(&format!("{stem}.csv"), &table.to_csv()?),
            Format::Json => self.write(&format!("{stem}.json"), &to_json_bytes(&table.to_json())?),
        }
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write(name, &to_json_bytes(value)?)
    }
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_lf_and_header() {
        let mut t = Table::new(vec!["detuning_hz", "isotope", "rate_ions_per_s"]);
        t.push(vec![num(-1.5e6), "138".into(), num(0.005)]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "detuning_hz,isotope,rate_ions_per_s\n-1500000,138,0.005\n");
    }

    #[test]
    fn json_rows_keep_numbers() {
        let mut t = Table::new(vec!["isotope", "rate_ions_per_s"]);
        t.push(vec!["total".into(), num(2.0)]);
        let v = t.to_json();
        assert_eq!(v[0]["isotope"], "total");
        assert_eq!(v[0]["rate_ions_per_s"], 2.0);
    }
}
