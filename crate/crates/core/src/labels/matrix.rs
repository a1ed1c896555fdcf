//! Label matrix over the combined label space and its on-disk form.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Ternary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    Diagnosis,
    Deterioration,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpace {
    pub names: Vec<String>,
    pub kinds: Vec<LabelKind>,
}

impl LabelSpace {
    pub fn new(diagnoses: &[String], deterioration: &[String]) -> Self {
        let names: Vec<String> = diagnoses.iter().chain(deterioration).cloned().collect();
        let kinds = std::iter::repeat_n(LabelKind::Diagnosis, diagnoses.len())
            .chain(std::iter::repeat_n(LabelKind::Deterioration, deterioration.len()))
            .collect();
        Self { names, kinds }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn indices(&self, kind: LabelKind) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.kinds[i] == kind).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (n, k) in self.names.iter().zip(&self.kinds) {
            h.update(format!("{n}:{k:?}\n").as_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let space: LabelSpace = serde_json::from_str(&text)?;
        if space.names.len() != space.kinds.len() {
            return Err(Error::Data(format!("{}: names and kinds differ in length", path.display())));
        }
        Ok(space)
    }
}

/// Row-major `[samples, labels]` ternary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    pub space: LabelSpace,
    pub sample_ids: Vec<String>,
    pub no_diagnoses: Vec<bool>,
    values: Vec<Ternary>,
}

impl LabelMatrix {
    pub fn new(space: LabelSpace) -> Self {
        Self {
            space,
            sample_ids: Vec::new(),
            no_diagnoses: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn push(&mut self, sample_id: String, row: Vec<Ternary>, no_diagnoses: bool) -> Result<()> {
        if row.len() != self.space.len() {
            return Err(Error::Shape(format!(
                "label row of length {} for a space of {}",
                row.len(),
                self.space.len()
            )));
        }
        if let Some(i) = row
            .iter()
            .zip(&self.space.kinds)
            .position(|(v, k)| v.is_masked() && *k == LabelKind::Diagnosis)
        {
            return Err(Error::Invalid(format!("diagnosis label `{}` cannot be masked", self.space.names[i])));
        }
        self.sample_ids.push(sample_id);
        self.no_diagnoses.push(no_diagnoses);
        self.values.extend(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }

    pub fn width(&self) -> usize {
        self.space.len()
    }

    pub fn row(&self, i: usize) -> &[Ternary] {
        let w = self.width();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn get(&self, i: usize, j: usize) -> Ternary {
        self.values[i * self.width() + j]
    }

    pub fn column(&self, j: usize) -> Vec<Ternary> {
        (0..self.len()).map(|i| self.get(i, j)).collect()
    }

    pub fn select(&self, rows: &[usize]) -> LabelMatrix {
        let mut out = LabelMatrix::new(self.space.clone());
        for &i in rows {
            out.sample_ids.push(self.sample_ids[i].clone());
            out.no_diagnoses.push(self.no_diagnoses[i]);
            out.values.extend_from_slice(self.row(i));
        }
        out
    }

    /// Sparse triplets; zeros are implicit. Every sample opens with a
    /// marker row whose value is 1 when the visit had no diagnosis record,
    /// so all-zero rows and sample order survive the round trip.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["sample_id", "label", "value"])?;
        for i in 0..self.len() {
            let id = self.sample_ids[i].as_str();
            w.write_record([id, SAMPLE_MARKER, if self.no_diagnoses[i] { "1" } else { "0" }])?;
            for (j, v) in self.row(i).iter().enumerate() {
                if *v != Ternary::Negative {
                    w.write_record([id, self.space.names[j].as_str(), v.symbol()])?;
                }
            }
        }
        w.flush().map_err(|e| Error::Data(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R, space: LabelSpace) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["sample_id", "label", "value"] {
            return Err(Error::Schema {
                table: "labels".into(),
                column: "sample_id,label,value".into(),
            });
        }
        let index: std::collections::HashMap<&str, usize> =
            space.names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let width = space.len();
        let mut ids = Vec::new();
        let mut flags = Vec::new();
        let mut values: Vec<Ternary> = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |message: String| Error::Row {
                table: "labels".into(),
                row: row + 1,
                message,
            };
            let (id, label, value) = (&rec[0], &rec[1], &rec[2]);
            if label == SAMPLE_MARKER {
                ids.push(id.to_string());
                flags.push(value == "1");
                values.extend(std::iter::repeat_n(Ternary::Negative, width));
                continue;
            }
            if ids.last().map(String::as_str) != Some(id) {
                return Err(bad(format!("entry for `{id}` outside its sample block")));
            }
            let j = *index.get(label).ok_or_else(|| bad(format!("unknown label `{label}`")))?;
            let v = Ternary::parse(value).ok_or_else(|| bad(format!("bad label value `{value}`")))?;
            if v.is_masked() && space.kinds[j] == LabelKind::Diagnosis {
                return Err(bad(format!("diagnosis label `{label}` cannot be masked")));
            }
            let base = (ids.len() - 1) * width;
            values[base + j] = v;
        }
        Ok(Self {
            space,
            sample_ids: ids,
            no_diagnoses: flags,
            values,
        })
    }

    pub fn save(&self, csv_path: &Path, space_path: &Path) -> Result<()> {
        let f = std::fs::File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
        self.write_csv(std::io::BufWriter::new(f))?;
        self.space.save(space_path)
    }

    pub fn load(csv_path: &Path, space_path: &Path) -> Result<Self> {
        let space = LabelSpace::load(space_path)?;
        let f = std::fs::File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
        Self::read_csv(std::io::BufReader::new(f), space)
    }
}

pub const SAMPLE_MARKER: &str = "__sample__";
