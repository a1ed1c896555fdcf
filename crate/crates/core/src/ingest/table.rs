use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::schema::{Fields, TableKind, TableRow};
use crate::error::{Error, Result};

/// A row the loader could not turn into a record. `row` is 1-based and
/// counts data rows only (the header is not a row).
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub row: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub kind: TableKind,
    pub rows: Vec<T>,
    pub diagnostics: Vec<Diagnostic>,
}

impl<T> Loaded<T> {
    pub fn input_rows(&self) -> usize {
        self.rows.len() + self.diagnostics.len()
    }

    /// First diagnostic as an error, for callers that want strict loading.
    pub fn strict(self) -> Result<Vec<T>> {
        match self.diagnostics.first() {
            Some(d) => Err(Error::Row {
                table: self.kind.name().into(),
                row: d.row,
                message: d.message.clone(),
            }),
            None => Ok(self.rows),
        }
    }
}

fn resolve(kind: TableKind, headers: &csv::StringRecord) -> Result<Vec<usize>> {
    kind.columns()
        .iter()
        .map(|col| {
            headers
                .iter()
                .position(|h| h.trim() == *col)
                .ok_or_else(|| Error::Schema {
                    table: kind.name().into(),
                    column: (*col).into(),
                })
        })
        .collect()
}

/// Parses every row of a table from any reader. Rows that fail to parse are
/// reported, never dropped silently.
pub fn read_table<T: TableRow, R: std::io::Read>(reader: R) -> Result<Loaded<T>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index = resolve(T::KIND, &headers)?;
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                diagnostics.push(Diagnostic {
                    row,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let fields = Fields {
            record: &rec,
            index: &index,
            names: T::KIND.columns(),
        };
        match T::parse(&fields) {
            Ok(r) => rows.push(r),
            Err(message) => diagnostics.push(Diagnostic { row, message }),
        }
    }
    Ok(Loaded {
        kind: T::KIND,
        rows,
        diagnostics,
    })
}

pub fn load_table<T: TableRow>(path: &Path) -> Result<Loaded<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_table(file)
}

pub fn write_table<T: TableRow, W: Write>(writer: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(T::KIND.columns())?;
    for r in rows {
        w.write_record(r.to_fields())?;
    }
    w.flush().map_err(|e| Error::io("<table writer>", e))?;
    Ok(())
}

pub fn save_table<T: TableRow>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_table(std::io::BufWriter::new(file), rows)
}
