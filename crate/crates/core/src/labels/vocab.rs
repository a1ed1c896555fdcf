//! Diagnosis target space.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::icd::{normalize_icd, truncate_and_propagate, IcdMap};
use super::Ternary;
use crate::cohort::Sample;
use crate::error::{Error, Result};
use crate::ingest::SourceIndex;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosisVocab {
    pub codes: Vec<String>,
    /// Number of samples carrying each code; zero for codes read from a file.
    pub counts: Vec<usize>,
}

impl DiagnosisVocab {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// One code per line, used verbatim in file order.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let codes: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        if codes.is_empty() {
            return Err(Error::Data(format!("{}: empty vocabulary", path.display())));
        }
        if let Some(bad) = codes.iter().find(|c| !(3..=5).contains(&c.len())) {
            return Err(Error::Data(format!("vocabulary code `{bad}` is not 3-5 characters")));
        }
        let counts = vec![0; codes.len()];
        Ok(Self { codes, counts })
    }

    pub fn position(&self, code: &str) -> Option<usize> {
        self.codes.iter().position(|c| c == code)
    }
}

/// Codes with at least `min_count` carrying samples, sorted.
pub fn build_vocab<'a, I>(code_sets: I, min_count: usize) -> Result<DiagnosisVocab>
where
    I: IntoIterator<Item = &'a BTreeSet<String>>,
{
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for set in code_sets {
        for c in set {
            *counts.entry(c.as_str()).or_default() += 1;
        }
    }
    let (codes, counts): (Vec<String>, Vec<usize>) = counts
        .into_iter()
        .filter(|&(_, n)| n >= min_count)
        .map(|(c, n)| (c.to_string(), n))
        .unzip();
    if codes.is_empty() {
        return Err(Error::Data(format!("no diagnosis code reaches min_count {min_count}")));
    }
    Ok(DiagnosisVocab { codes, counts })
}

/// Normalised and propagated discharge codes of a sample, or `None` when
/// the visit has no diagnosis record at all.
pub fn sample_codes(sample: &Sample, index: &SourceIndex, map: &IcdMap) -> Result<Option<BTreeSet<String>>> {
    let ed = index.ed_diagnoses(&sample.stay_id);
    let hosp = index.hosp_diagnoses(sample.hadm_id.as_deref());
    if ed.is_empty() && hosp.is_empty() {
        return Ok(None);
    }
    let mut out = BTreeSet::new();
    for rec in ed.iter().chain(hosp) {
        for code in normalize_icd(&rec.icd_code, rec.icd_version, map) {
            out.extend(truncate_and_propagate(&code)?);
        }
    }
    Ok(Some(out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisLabels {
    pub values: Vec<Ternary>,
    pub no_diagnoses: bool,
}

pub fn diagnosis_labels(codes: Option<&BTreeSet<String>>, vocab: &DiagnosisVocab) -> DiagnosisLabels {
    match codes {
        None => DiagnosisLabels {
            values: vec![Ternary::Negative; vocab.len()],
            no_diagnoses: true,
        },
        Some(set) => DiagnosisLabels {
            values: vocab.codes.iter().map(|c| Ternary::from_bool(set.contains(c))).collect(),
            no_diagnoses: false,
        },
    }
}
