use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::assemble::{FeatureLayout, FeatureVector};
use crate::error::{Error, Result};

/// Unimputed features of a set of samples, row order = `sample_ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub layout: FeatureLayout,
    pub sample_ids: Vec<String>,
    pub categorical: Vec<[usize; 3]>,
    /// `[samples, routine columns]`, NaN where missing.
    pub numeric: Array2<f64>,
    /// `[samples, 8]`, NaN where missing.
    pub ecg: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnInfo {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mask_column: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Id,
    Categorical,
    Numeric,
    Ecg,
}

/// JSON header written next to the feature CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureHeader {
    pub registry_hash: String,
    pub columns: Vec<ColumnInfo>,
}

pub fn mask_name(column: &str) -> String {
    format!("{column}_mask")
}

impl FeatureMatrix {
    pub fn from_vectors(layout: FeatureLayout, ids: Vec<String>, rows: &[FeatureVector]) -> Self {
        let n = rows.len();
        let p = layout.numeric.len();
        let numeric = Array2::from_shape_fn((n, p), |(i, j)| rows[i].numeric[j]);
        let ecg = Array2::from_shape_fn((n, 8), |(i, j)| rows[i].ecg[j]);
        Self {
            layout,
            sample_ids: ids,
            categorical: rows.iter().map(|r| r.categorical).collect(),
            numeric,
            ecg,
        }
    }

    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }

    pub fn header(&self) -> FeatureHeader {
        let l = &self.layout;
        let mut columns = vec![ColumnInfo {
            name: "sample_id".into(),
            kind: ColumnKind::Id,
            mask_column: None,
        }];
        let with_mask = |n: &String, kind| ColumnInfo {
            name: n.clone(),
            kind,
            mask_column: Some(mask_name(n)),
        };
        columns.extend(l.categorical.iter().map(|n| ColumnInfo {
            name: n.clone(),
            kind: ColumnKind::Categorical,
            mask_column: None,
        }));
        columns.extend(l.numeric.iter().map(|n| with_mask(n, ColumnKind::Numeric)));
        columns.extend(l.ecg.iter().map(|n| with_mask(n, ColumnKind::Ecg)));
        FeatureHeader {
            registry_hash: l.registry_hash.clone(),
            columns,
        }
    }

    /// Row subset in the given order.
    pub fn select(&self, rows: &[usize]) -> FeatureMatrix {
        let p = self.numeric.ncols();
        FeatureMatrix {
            layout: self.layout.clone(),
            sample_ids: rows.iter().map(|&r| self.sample_ids[r].clone()).collect(),
            categorical: rows.iter().map(|&r| self.categorical[r]).collect(),
            numeric: Array2::from_shape_fn((rows.len(), p), |(i, j)| self.numeric[[rows[i], j]]),
            ecg: Array2::from_shape_fn((rows.len(), 8), |(i, j)| self.ecg[[rows[i], j]]),
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header = self.header();
        w.write_record(header.columns.iter().map(|c| c.name.as_str()))?;
        let fmt = |v: f64| if v.is_nan() { String::new() } else { v.to_string() };
        for i in 0..self.len() {
            let mut rec = Vec::with_capacity(header.columns.len());
            rec.push(self.sample_ids[i].clone());
            rec.extend(self.categorical[i].iter().map(|c| c.to_string()));
            rec.extend(self.numeric.row(i).iter().map(|&v| fmt(v)));
            rec.extend(self.ecg.row(i).iter().map(|&v| fmt(v)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<features>", e))?;
        Ok(())
    }

    /// Writes `<stem>.csv` and its JSON header `<stem>.json`.
    pub fn save(&self, csv_path: &Path, header_path: &Path) -> Result<()> {
        let f = std::fs::File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
        self.write_csv(std::io::BufWriter::new(f))?;
        let text = serde_json::to_string_pretty(&self.header())? + "\n";
        std::fs::write(header_path, text).map_err(|e| Error::io(header_path, e))
    }

    /// Reads a feature CSV and checks it carries every column of `layout`.
    pub fn read_csv<R: std::io::Read>(reader: R, layout: &FeatureLayout) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
        layout.check_columns(&names)?;
        let pos = |n: &str| names.iter().position(|m| m == n).expect("checked");
        let id_col = names
            .iter()
            .position(|m| m == "sample_id")
            .ok_or_else(|| Error::Schema {
                table: "features".into(),
                column: "sample_id".into(),
            })?;
        let cat: Vec<usize> = layout.categorical.iter().map(|n| pos(n)).collect();
        let num: Vec<usize> = layout.numeric.iter().map(|n| pos(n)).collect();
        let ecg: Vec<usize> = layout.ecg.iter().map(|n| pos(n)).collect();
        let mut ids = Vec::new();
        let mut cats = Vec::new();
        let mut nums = Vec::new();
        let mut ecgs = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = |c: usize| Error::Row {
                table: "features".into(),
                row: row + 1,
                message: format!("bad value in `{}`", names[c]),
            };
            let float = |c: usize| -> Result<f64> {
                let v = rec.get(c).unwrap_or("");
                if v.is_empty() {
                    Ok(f64::NAN)
                } else {
                    v.parse().map_err(|_| bad(c))
                }
            };
            ids.push(rec.get(id_col).unwrap_or("").to_string());
            let mut c3 = [0usize; 3];
            for (k, &c) in cat.iter().enumerate() {
                c3[k] = rec.get(c).unwrap_or("").parse().map_err(|_| bad(c))?;
            }
            cats.push(c3);
            for &c in &num {
                nums.push(float(c)?);
            }
            for &c in &ecg {
                ecgs.push(float(c)?);
            }
        }
        let n = ids.len();
        Ok(Self {
            layout: layout.clone(),
            sample_ids: ids,
            categorical: cats,
            numeric: Array2::from_shape_vec((n, num.len()), nums).expect("rectangular"),
            ecg: Array2::from_shape_vec((n, ecg.len()), ecgs).expect("rectangular"),
        })
    }

    pub fn load(path: &Path, layout: &FeatureLayout) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(f), layout)
    }
}
