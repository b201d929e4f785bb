//! Shared CSV reading/writing used by every loader.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use csv::StringRecord;

use crate::error::{Error, Result};

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(|f| BufReader::with_capacity(1 << 16, f))
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn source_name(path: &Path) -> String {
    path.display().to_string()
}

/// One data row, carrying enough locus information to build errors.
pub(crate) struct Row<'a> {
    pub source: &'a str,
    pub line: u64,
    pub record: &'a StringRecord,
}

impl Row<'_> {
    pub fn str(&self, idx: usize) -> &str {
        self.record.get(idx).unwrap_or("")
    }

    pub fn parse_err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            source_name: self.source.to_owned(),
            line: self.line,
            message: message.into(),
        }
    }

    pub fn nonempty(&self, idx: usize, field: &str) -> Result<&str> {
        let s = self.str(idx).trim();
        if s.is_empty() {
            return Err(self.parse_err(format!("empty {field}")));
        }
        Ok(s)
    }

    pub fn f64(&self, idx: usize, field: &str) -> Result<f64> {
        let raw = self.str(idx).trim();
        let v: f64 = raw
            .parse()
            .map_err(|_| self.parse_err(format!("{field}: cannot parse {raw:?} as a number")))?;
        if !v.is_finite() {
            return Err(self.parse_err(format!("{field}: non-finite value {raw:?}")));
        }
        Ok(v)
    }

    pub fn f64_in(&self, idx: usize, field: &'static str, what: &str, min: f64, max: f64) -> Result<f64> {
        let v = self.f64(idx, field)?;
        if v < min || v > max {
            return Err(Error::OutOfRange {
                source_name: self.source.to_owned(),
                line: self.line,
                what: what.to_owned(),
                field,
                value: v,
                min,
                max,
            });
        }
        Ok(v)
    }

    pub fn duplicate(&self, what: impl Into<String>) -> Error {
        Error::Duplicate {
            source_name: self.source.to_owned(),
            line: self.line,
            what: what.into(),
        }
    }

    pub fn inconsistent(&self, what: impl Into<String>) -> Error {
        Error::Inconsistent {
            source_name: self.source.to_owned(),
            line: self.line,
            what: what.into(),
        }
    }
}

/// Streams the rows of a headed CSV, rejecting any header other than
/// `expected` (column names must match exactly and in order).
pub(crate) fn for_each_row<R, F>(reader: R, source: &str, expected: &[&str], mut f: F) -> Result<()>
where
    R: Read,
    F: FnMut(&Row<'_>) -> Result<()>,
{
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_err(source, &e))?.clone();
    let found: Vec<String> = header.iter().map(|h| h.trim().to_owned()).collect();
    if found.len() != expected.len() || found.iter().zip(expected).any(|(a, b)| a != b) {
        return Err(Error::Header {
            source_name: source.to_owned(),
            found,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        });
    }
    let mut record = StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(0, |p| p.line());
                f(&Row {
                    source,
                    line,
                    record: &record,
                })?;
            }
            Err(e) => return Err(csv_err(source, &e)),
        }
    }
    Ok(())
}

fn csv_err(source: &str, e: &csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        source_name: source.to_owned(),
        line,
        message: e.to_string(),
    }
}

/// Serialises `rows` under `header` into a byte buffer.
pub(crate) fn write_rows<I, T>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = T>,
    T: IntoIterator,
    T::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    // Writing into a Vec cannot fail.
    w.write_record(header).expect("in-memory csv write");
    for row in rows {
        w.write_record(row).expect("in-memory csv write");
    }
    w.into_inner().expect("in-memory csv flush")
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
