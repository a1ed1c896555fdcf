use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use log::debug;

use crate::error::{Error, Result};
use crate::ingest::clean_icd;

/// ICD-9 to ICD-10-CM equivalence table. One source code may map to several
/// targets; all of them are emitted.
#[derive(Debug, Clone, Default)]
pub struct IcdMap {
    map: HashMap<String, Vec<String>>,
}

impl IcdMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, icd9: &str, icd10: &str) {
        let targets = self.map.entry(clean_icd(icd9)).or_default();
        let t = clean_icd(icd10);
        if !targets.contains(&t) {
            targets.push(t);
        }
    }

    /// Reads a CSV with columns `icd9,icd10`.
    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Schema {
                table: "icd9_to_icd10".into(),
                column: name.into(),
            })
        };
        let (c9, c10) = (col("icd9")?, col("icd10")?);
        let mut m = Self::new();
        for rec in rdr.records() {
            let rec = rec?;
            let (a, b) = (rec.get(c9).unwrap_or(""), rec.get(c10).unwrap_or(""));
            if !a.trim().is_empty() && !b.trim().is_empty() {
                m.insert(a, b);
            }
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(f)
    }

    pub fn get(&self, icd9: &str) -> Option<&[String]> {
        self.map.get(icd9).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// ICD-10 codes pass through; ICD-9 codes go through the map and are dropped
/// (with a log line) when absent from it.
pub fn normalize_icd(code: &str, version: u8, map: &IcdMap) -> Vec<String> {
    if version == 10 {
        return vec![code.to_string()];
    }
    match map.get(code) {
        Some(targets) => targets.to_vec(),
        None => {
            debug!("ICD-9 code {code} has no ICD-10 equivalent; dropped");
            Vec::new()
        }
    }
}

/// The code cut to at most five characters plus every prefix down to the
/// three-character category.
pub fn truncate_and_propagate(code: &str) -> Result<BTreeSet<String>> {
    let chars: Vec<char> = code.chars().collect();
    if chars.len() < 3 {
        return Err(Error::Invalid(format!("ICD-10 code `{code}` shorter than 3 characters")));
    }
    let top = chars.len().min(5);
    Ok((3..=top).map(|n| chars[..n].iter().collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icd10_is_identity() {
        assert_eq!(normalize_icd("I2109", 10, &IcdMap::new()), ["I2109"]);
    }

    #[test]
    fn icd9_maps_or_drops() {
        let mut m = IcdMap::new();
        m.insert("427.5", "I46.9");
        assert_eq!(normalize_icd("4275", 9, &m), ["I469"]);
        assert!(normalize_icd("XXXX", 9, &m).is_empty());
    }

    #[test]
    fn one_to_many() {
        let m = IcdMap::from_csv("icd9,icd10\n25000,E119\n25000,E139\n".as_bytes()).unwrap();
        assert_eq!(normalize_icd("25000", 9, &m), ["E119", "E139"]);
    }

    #[test]
    fn propagation() {
        let set = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        assert_eq!(truncate_and_propagate("I2109").unwrap(), set(&["I2109", "I210", "I21"]));
        assert_eq!(truncate_and_propagate("E119").unwrap(), set(&["E119", "E11"]));
        assert_eq!(truncate_and_propagate("A40").unwrap(), set(&["A40"]));
        assert_eq!(truncate_and_propagate("S72001A").unwrap(), set(&["S7200", "S720", "S72"]));
        assert!(truncate_and_propagate("A4").is_err());
    }
}
