//! CSV formatting shared by every table the harness writes.
//!
//! Numbers carry 17 significant digits so that a value read back is the
//! value written; missing values are empty fields.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Rows of optional numbers under a fixed header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column_index(&self) -> HashMap<&str, usize> {
        self.header.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect()
    }

    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| fmt_opt(*x)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(file)
    }

    pub fn to_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Numerical(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Table> {
        Self::read_from(std::fs::File::open(path)?)
    }

    pub fn read_from(input: impl std::io::Read) -> Result<Table> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let mut table = Table::new(header);
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| {
                    let f = f.trim();
                    if f.is_empty() {
                        Ok(None)
                    } else {
                        f.parse::<f64>()
                            .map(Some)
                            .map_err(|_| Error::validation(format!("row {}: cannot parse {f:?} as a number", line + 2)))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != table.header.len() {
                return Err(Error::validation(format!("row {} has {} fields, header has {}", line + 2, row.len(), table.header.len())));
            }
            table.rows.push(row);
        }
        Ok(table)
    }
}
