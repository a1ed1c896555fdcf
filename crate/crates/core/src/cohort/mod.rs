//! Adult ED visits with a 12-lead ECG recorded inside the feature window.

pub mod demographics;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use log::info;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{EcgManifestRecord, StayRecord};
use crate::time::{format_timestamp, parse_timestamp, Timestamp, MINUTE};
use demographics::{age_bin, gender_index, race_index, AGE_BINS, GENDERS, RACES};

/// Length of the feature window after arrival.
pub const WINDOW: i64 = 90 * MINUTE;
pub const MIN_AGE: u32 = 18;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub sample_id: String,
    pub subject_id: String,
    pub stay_id: String,
    pub hadm_id: Option<String>,
    pub record_id: String,
    pub ecg_time: Timestamp,
    pub arrival: Timestamp,
    pub window_end: Timestamp,
    pub is_first_of_visit: bool,
    pub age: u32,
    pub gender: String,
    pub race: String,
    pub acuity: Option<u8>,
    pub fold: Option<usize>,
}

/// Pairs every ECG with the adult stay whose window contains it. Both window
/// ends are inclusive. An ECG inside several overlapping windows goes to the
/// stay with the earliest arrival.
pub fn link_ecg_to_stays(stays: &[StayRecord], ecgs: &[EcgManifestRecord]) -> Vec<Sample> {
    let mut by_subject: HashMap<&str, Vec<&StayRecord>> = HashMap::new();
    for s in stays.iter().filter(|s| s.age >= MIN_AGE) {
        by_subject.entry(s.subject_id.as_str()).or_default().push(s);
    }
    for v in by_subject.values_mut() {
        v.sort_by(|a, b| (a.intime, &a.stay_id).cmp(&(b.intime, &b.stay_id)));
    }
    let mut samples = Vec::new();
    for ecg in ecgs {
        let Some(cands) = by_subject.get(ecg.subject_id.as_str()) else {
            continue;
        };
        let mut matching = cands
            .iter()
            .filter(|s| s.intime <= ecg.ecg_time && ecg.ecg_time <= s.intime + WINDOW);
        let Some(stay) = matching.next() else {
            continue;
        };
        let others = matching.count();
        if others > 0 {
            info!(
                "ECG {} falls in {} overlapping stay windows; assigned to {}",
                ecg.record_id,
                others + 1,
                stay.stay_id
            );
        }
        samples.push(Sample {
            sample_id: format!("{}_{}", stay.stay_id, ecg.record_id),
            subject_id: stay.subject_id.clone(),
            stay_id: stay.stay_id.clone(),
            hadm_id: stay.hadm_id.clone(),
            record_id: ecg.record_id.clone(),
            ecg_time: ecg.ecg_time,
            arrival: stay.intime,
            window_end: stay.intime + WINDOW,
            is_first_of_visit: false,
            age: stay.age,
            gender: stay.gender.clone(),
            race: stay.race.clone(),
            acuity: stay.acuity,
            fold: None,
        });
    }
    samples.sort_by(|a, b| {
        (&a.subject_id, a.arrival, &a.stay_id, a.ecg_time, &a.record_id).cmp(&(
            &b.subject_id,
            b.arrival,
            &b.stay_id,
            b.ecg_time,
            &b.record_id,
        ))
    });
    let mut seen = std::collections::HashSet::new();
    for s in &mut samples {
        s.is_first_of_visit = seen.insert(s.stay_id.clone());
    }
    samples
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Share {
    pub name: String,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortStats {
    pub patients: usize,
    pub visits: usize,
    pub samples: usize,
    pub gender: Vec<Share>,
    pub age_median: f64,
    pub age_sd: f64,
    pub age_bins: Vec<Share>,
    pub ethnicity: Vec<Share>,
}

fn shares(names: &[&str], counts: &[usize], total: usize) -> Vec<Share> {
    names
        .iter()
        .zip(counts)
        .map(|(n, &c)| Share {
            name: n.to_string(),
            count: c,
            percent: 100.0 * c as f64 / total as f64,
        })
        .collect()
}

/// Sample-level demographic summary. Unknown gender or race are listed as
/// "Unknown" when present.
pub fn cohort_stats(samples: &[Sample]) -> Result<CohortStats> {
    if samples.is_empty() {
        return Err(Error::Data("empty cohort".into()));
    }
    let n = samples.len();
    let patients = samples.iter().map(|s| &s.subject_id).collect::<std::collections::HashSet<_>>();
    let visits = samples.iter().map(|s| &s.stay_id).collect::<std::collections::HashSet<_>>();
    let mut gender = [0usize; 3];
    let mut race = [0usize; 6];
    let mut bins = [0usize; 4];
    let mut ages: Vec<f64> = Vec::with_capacity(n);
    for s in samples {
        gender[gender_index(&s.gender)] += 1;
        race[race_index(&s.race)] += 1;
        bins[age_bin(s.age)] += 1;
        ages.push(s.age as f64);
    }
    ages.sort_by(f64::total_cmp);
    let age_median = if n % 2 == 1 {
        ages[n / 2]
    } else {
        0.5 * (ages[n / 2 - 1] + ages[n / 2])
    };
    let mean = ages.iter().sum::<f64>() / n as f64;
    let age_sd = (ages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let mut gender_names: Vec<&str> = GENDERS.to_vec();
    let mut gender_counts = gender[1..].to_vec();
    if gender[0] > 0 {
        gender_names.push("Unknown");
        gender_counts.push(gender[0]);
    }
    let mut race_names: Vec<&str> = RACES.to_vec();
    let mut race_counts = race[1..].to_vec();
    if race[0] > 0 {
        race_names.push("Unknown");
        race_counts.push(race[0]);
    }
    Ok(CohortStats {
        patients: patients.len(),
        visits: visits.len(),
        samples: n,
        gender: shares(&gender_names, &gender_counts, n),
        age_median,
        age_sd,
        age_bins: shares(&AGE_BINS, &bins, n),
        ethnicity: shares(&race_names, &race_counts, n),
    })
}

impl fmt::Display for CohortStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} patients, {} visits, {} samples",
            self.patients, self.visits, self.samples
        )?;
        let section = |f: &mut fmt::Formatter<'_>, title: &str, rows: &[Share]| -> fmt::Result {
            writeln!(f, "{title}")?;
            for r in rows {
                writeln!(f, "  {:<10} {:>8} ({:.2})", r.name, r.count, r.percent)?;
            }
            Ok(())
        };
        section(f, "Gender (%)", &self.gender)?;
        writeln!(f, "Age median {} (SD {:.0})", self.age_median, self.age_sd)?;
        section(f, "Age (%)", &self.age_bins)?;
        section(f, "Ethnicity (%)", &self.ethnicity)
    }
}

const SAMPLE_COLUMNS: [&str; 14] = [
    "sample_id",
    "subject_id",
    "stay_id",
    "hadm_id",
    "record_id",
    "ecg_time",
    "arrival",
    "window_end",
    "is_first_of_visit",
    "age",
    "gender",
    "race",
    "acuity",
    "fold",
];

pub fn write_samples<W: std::io::Write>(writer: W, samples: &[Sample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SAMPLE_COLUMNS)?;
    for s in samples {
        w.write_record([
            s.sample_id.clone(),
            s.subject_id.clone(),
            s.stay_id.clone(),
            s.hadm_id.clone().unwrap_or_default(),
            s.record_id.clone(),
            format_timestamp(s.ecg_time),
            format_timestamp(s.arrival),
            format_timestamp(s.window_end),
            (s.is_first_of_visit as u8).to_string(),
            s.age.to_string(),
            s.gender.clone(),
            s.race.clone(),
            s.acuity.map(|a| a.to_string()).unwrap_or_default(),
            s.fold.map(|f| f.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<samples>", e))?;
    Ok(())
}

pub fn save_samples(path: &Path, samples: &[Sample]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_samples(std::io::BufWriter::new(f), samples)
}

pub fn read_samples<R: std::io::Read>(reader: R) -> Result<Vec<Sample>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx: BTreeMap<&str, usize> = SAMPLE_COLUMNS
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == *c)
                .map(|i| (*c, i))
                .ok_or_else(|| Error::Schema {
                    table: "samples".into(),
                    column: (*c).into(),
                })
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |c: &str| rec.get(idx[c]).unwrap_or("");
        let bad = |m: String| Error::Row {
            table: "samples".into(),
            row: row + 1,
            message: m,
        };
        let ts = |c: &str| parse_timestamp(get(c)).ok_or_else(|| bad(format!("bad `{c}`")));
        let opt = |c: &str| Some(get(c).to_string()).filter(|v| !v.is_empty());
        out.push(Sample {
            sample_id: get("sample_id").into(),
            subject_id: get("subject_id").into(),
            stay_id: get("stay_id").into(),
            hadm_id: opt("hadm_id"),
            record_id: get("record_id").into(),
            ecg_time: ts("ecg_time")?,
            arrival: ts("arrival")?,
            window_end: ts("window_end")?,
            is_first_of_visit: get("is_first_of_visit") == "1",
            age: get("age").parse().map_err(|_| bad("bad `age`".into()))?,
            gender: get("gender").into(),
            race: get("race").into(),
            acuity: opt("acuity").map(|a| a.parse()).transpose().map_err(|_| bad("bad `acuity`".into()))?,
            fold: opt("fold").map(|f| f.parse()).transpose().map_err(|_| bad("bad `fold`".into()))?,
        });
    }
    Ok(out)
}

pub fn load_samples(path: &Path) -> Result<Vec<Sample>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_samples(f)
}
