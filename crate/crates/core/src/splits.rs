//! Patient-level stratified folds.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cohort::demographics::{age_bin, gender_index};
use crate::cohort::Sample;
use crate::error::{Error, Result};
use crate::labels::{LabelKind, LabelMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldRoles {
    pub n_folds: usize,
    pub val_fold: usize,
    pub test_fold: usize,
}

impl Default for FoldRoles {
    fn default() -> Self {
        Self {
            n_folds: 20,
            val_fold: 18,
            test_fold: 19,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Train,
    Val,
    Test,
}

impl FoldRoles {
    pub fn validate(&self) -> Result<()> {
        if self.n_folds < 3 {
            return Err(Error::Config(format!("n_folds must be at least 3, got {}", self.n_folds)));
        }
        if self.val_fold >= self.n_folds || self.test_fold >= self.n_folds || self.val_fold == self.test_fold {
            return Err(Error::Config(format!(
                "val_fold {} and test_fold {} must be distinct folds below {}",
                self.val_fold, self.test_fold, self.n_folds
            )));
        }
        Ok(())
    }

    pub fn role(&self, fold: usize) -> Role {
        if fold == self.val_fold {
            Role::Val
        } else if fold == self.test_fold {
            Role::Test
        } else {
            Role::Train
        }
    }

    /// Indices of the samples whose fold plays `role`.
    pub fn select(&self, samples: &[Sample], role: Role) -> Vec<usize> {
        samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.fold.is_some_and(|f| self.role(f) == role))
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub by_subject: BTreeMap<String, usize>,
    pub roles: FoldRoles,
}

impl FoldAssignment {
    pub fn fold_of(&self, subject_id: &str) -> Option<usize> {
        self.by_subject.get(subject_id).copied()
    }

    /// Writes each sample's fold; fails when a subject is unassigned.
    pub fn apply(&self, samples: &mut [Sample]) -> Result<()> {
        for s in samples {
            let f = self
                .fold_of(&s.subject_id)
                .ok_or_else(|| Error::Data(format!("subject {} has no fold", s.subject_id)))?;
            s.fold = Some(f);
        }
        Ok(())
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["subject_id", "fold"])?;
        for (s, f) in &self.by_subject {
            w.write_record([s.as_str(), &f.to_string()])?;
        }
        w.flush().map_err(|e| Error::Data(e.to_string()))?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Reads an externally computed `subject_id,fold` file verbatim.
    pub fn read_csv<R: std::io::Read>(reader: R, roles: FoldRoles) -> Result<Self> {
        roles.validate()?;
        let mut r = csv::Reader::from_reader(reader);
        let h = r.headers()?.clone();
        let col = |name: &str| {
            h.iter().position(|c| c == name).ok_or_else(|| Error::Schema {
                table: "folds".into(),
                column: name.into(),
            })
        };
        let (si, fi) = (col("subject_id")?, col("fold")?);
        let mut by_subject = BTreeMap::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |message: String| Error::Row {
                table: "folds".into(),
                row: row + 1,
                message,
            };
            let fold: usize = rec[fi].trim().parse().map_err(|_| bad(format!("bad fold `{}`", &rec[fi])))?;
            if fold >= roles.n_folds {
                return Err(bad(format!("fold {fold} outside 0..{}", roles.n_folds)));
            }
            if by_subject.insert(rec[si].to_string(), fold).is_some() {
                return Err(bad(format!("subject {} listed twice", &rec[si])));
            }
        }
        Ok(Self { by_subject, roles })
    }

    pub fn load(path: &Path, roles: FoldRoles) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(f), roles)
    }
}

/// Stratification keys of each patient: gender, age bin at the first visit
/// and every positive diagnosis label across visits.
pub fn patient_keys(samples: &[Sample], labels: &LabelMatrix) -> Result<BTreeMap<String, BTreeSet<String>>> {
    let rows: HashMap<&str, usize> = labels.sample_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let diag = labels.space.indices(LabelKind::Diagnosis);
    let mut first: HashMap<&str, &Sample> = HashMap::new();
    let mut keys: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for s in samples {
        let i = *rows
            .get(s.sample_id.as_str())
            .ok_or_else(|| Error::Data(format!("sample {} has no labels", s.sample_id)))?;
        let set = keys.entry(s.subject_id.clone()).or_default();
        for &j in &diag {
            if labels.get(i, j).is_positive() {
                set.insert(format!("dx:{}", labels.space.names[j]));
            }
        }
        let e = first.entry(s.subject_id.as_str()).or_insert(s);
        if s.arrival < e.arrival {
            *e = s;
        }
    }
    for (subject, s) in first {
        let set = keys.get_mut(subject).expect("subject seen");
        set.insert(format!("gender:{}", gender_index(&s.gender)));
        set.insert(format!("age:{}", age_bin(s.age)));
    }
    Ok(keys)
}

/// Greedy iterative multilabel stratification over patients.
///
/// Each step takes the key with the fewest unassigned patients and places
/// those patients, in seeded random order, into the fold that still wants
/// the most of that key; ties go to the fold with the most free capacity,
/// then to a seeded draw.
pub fn stratify(keys: &BTreeMap<String, BTreeSet<String>>, roles: FoldRoles, seed: u64) -> Result<FoldAssignment> {
    roles.validate()?;
    let k = roles.n_folds;
    let n = keys.len();
    if k > n {
        return Err(Error::Data(format!("{k} folds requested for {n} patients")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let patients: Vec<&String> = keys.keys().collect();
    let key_names: Vec<&String> = keys.values().flatten().collect::<BTreeSet<_>>().into_iter().collect();
    let key_id: HashMap<&str, usize> = key_names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let pkeys: Vec<Vec<usize>> = keys.values().map(|s| s.iter().map(|c| key_id[c.as_str()]).collect()).collect();

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); key_names.len()];
    for (p, ks) in pkeys.iter().enumerate() {
        for &c in ks {
            members[c].push(p);
        }
    }
    let frac = 1.0 / k as f64;
    let mut desired: Vec<Vec<f64>> = members.iter().map(|m| vec![m.len() as f64 * frac; k]).collect();
    let mut capacity = vec![n as f64 * frac; k];
    let mut remaining: Vec<usize> = members.iter().map(Vec::len).collect();
    let mut fold: Vec<Option<usize>> = vec![None; n];
    let mut left = n;

    let choose = |scores: &dyn Fn(usize) -> (f64, f64), rng: &mut ChaCha8Rng| -> usize {
        let mut best: Vec<usize> = Vec::new();
        let mut top = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for f in 0..k {
            let s = scores(f);
            if s > top {
                top = s;
                best.clear();
                best.push(f);
            } else if s == top {
                best.push(f);
            }
        }
        best[rng.random_range(0..best.len())]
    };

    while left > 0 {
        let next = (0..key_names.len()).filter(|&c| remaining[c] > 0).min_by_key(|&c| (remaining[c], c));
        let mut group: Vec<usize> = match next {
            Some(c) => members[c].iter().copied().filter(|&p| fold[p].is_none()).collect(),
            None => (0..n).filter(|&p| fold[p].is_none()).collect(),
        };
        group.shuffle(&mut rng);
        for p in group {
            let f = match next {
                Some(c) => choose(&|f| (desired[c][f], capacity[f]), &mut rng),
                None => choose(&|f| (capacity[f], 0.0), &mut rng),
            };
            fold[p] = Some(f);
            left -= 1;
            capacity[f] -= 1.0;
            for &c2 in &pkeys[p] {
                desired[c2][f] -= 1.0;
                remaining[c2] -= 1;
            }
        }
    }
    let by_subject = patients
        .into_iter()
        .zip(fold)
        .map(|(s, f)| (s.clone(), f.expect("every patient placed")))
        .collect();
    Ok(FoldAssignment { by_subject, roles })
}

pub fn assign_folds(samples: &[Sample], labels: &LabelMatrix, roles: FoldRoles, seed: u64) -> Result<FoldAssignment> {
    stratify(&patient_keys(samples, labels)?, roles, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(n: usize, f: impl Fn(usize) -> Vec<String>) -> BTreeMap<String, BTreeSet<String>> {
        (0..n).map(|i| (format!("p{i:04}"), f(i).into_iter().collect())).collect()
    }

    #[test]
    fn one_patient_per_fold() {
        let k = keys(20, |_| vec!["gender:1".into()]);
        let a = stratify(&k, FoldRoles::default(), 3).unwrap();
        let folds: BTreeSet<usize> = a.by_subject.values().copied().collect();
        assert_eq!(folds.len(), 20);
    }

    #[test]
    fn too_many_folds() {
        let k = keys(5, |_| vec!["gender:1".into()]);
        assert!(stratify(&k, FoldRoles::default(), 0).is_err());
    }

    #[test]
    fn bad_roles() {
        let roles = FoldRoles {
            n_folds: 5,
            val_fold: 4,
            test_fold: 4,
        };
        assert!(roles.validate().is_err());
    }

    #[test]
    fn balanced_and_deterministic() {
        let k = keys(2000, |i| {
            let mut v = vec![format!("gender:{}", 1 + i % 2), format!("age:{}", i % 4)];
            if i % 7 == 0 {
                v.push("dx:I21".into());
            }
            v
        });
        let a = stratify(&k, FoldRoles::default(), 11).unwrap();
        assert_eq!(a, stratify(&k, FoldRoles::default(), 11).unwrap());
        let mut sizes = [0usize; 20];
        let mut dx = [0usize; 20];
        for (s, &f) in &a.by_subject {
            sizes[f] += 1;
            if k[s].contains("dx:I21") {
                dx[f] += 1;
            }
        }
        assert!(sizes.iter().all(|&s| (95..=105).contains(&s)), "{sizes:?}");
        let global = 286.0 / 2000.0;
        for f in 0..20 {
            let p = dx[f] as f64 / sizes[f] as f64;
            assert!((p - global).abs() <= 0.2 * global, "fold {f}: {p}");
        }
    }

    #[test]
    fn fold_file_round_trip() {
        let k = keys(40, |i| vec![format!("gender:{}", i % 2)]);
        let a = stratify(&k, FoldRoles::default(), 1).unwrap();
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        assert_eq!(FoldAssignment::read_csv(&buf[..], a.roles).unwrap(), a);
    }
}
