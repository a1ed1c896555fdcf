use std::collections::HashMap;

use super::schema::{BiometricRecord, CodedEventRecord, EventRecord, Link, MedRecord, OutcomeRecord, StayRecord};
use super::sources::SourceTables;
use crate::time::Timestamp;

/// Key lookups over loaded tables. Holds positions, not copies.
#[derive(Debug, Default)]
pub struct SourceIndex<'a> {
    stays: HashMap<&'a str, &'a StayRecord>,
    admissions: HashMap<&'a str, &'a OutcomeRecord>,
    dod: HashMap<&'a str, Timestamp>,
    vitals: HashMap<&'a str, Vec<&'a EventRecord>>,
    labs: HashMap<&'a str, Vec<&'a EventRecord>>,
    meds: HashMap<&'a str, Vec<&'a MedRecord>>,
    procedures: HashMap<&'a str, Vec<&'a CodedEventRecord>>,
    dx_ed: HashMap<&'a str, Vec<&'a CodedEventRecord>>,
    dx_hosp: HashMap<&'a str, Vec<&'a CodedEventRecord>>,
    omr: HashMap<&'a str, Vec<&'a BiometricRecord>>,
}

fn link_key(link: &Link) -> &str {
    match link {
        Link::Stay(s) | Link::Hadm(s) => s.as_str(),
    }
}

impl<'a> SourceIndex<'a> {
    pub fn new(t: &'a SourceTables) -> Self {
        let mut ix = SourceIndex::default();
        ix.stays = t.stays.iter().map(|s| (s.stay_id.as_str(), s)).collect();
        ix.admissions = t.admissions.iter().map(|a| (a.hadm_id.as_str(), a)).collect();
        for a in &t.admissions {
            if let Some(d) = a.dod {
                ix.dod
                    .entry(a.subject_id.as_str())
                    .and_modify(|v| *v = (*v).min(d))
                    .or_insert(d);
            }
        }
        for e in &t.vitals {
            if let Some(s) = &e.stay_id {
                ix.vitals.entry(s.as_str()).or_default().push(e);
            }
        }
        for e in &t.labs {
            ix.labs.entry(e.subject_id.as_str()).or_default().push(e);
        }
        for m in &t.meds {
            ix.meds.entry(m.stay_id.as_str()).or_default().push(m);
        }
        for p in &t.procedures {
            ix.procedures.entry(link_key(&p.link)).or_default().push(p);
        }
        for d in &t.diagnoses_ed {
            ix.dx_ed.entry(link_key(&d.link)).or_default().push(d);
        }
        for d in &t.diagnoses_hosp {
            ix.dx_hosp.entry(link_key(&d.link)).or_default().push(d);
        }
        for o in &t.omr {
            ix.omr.entry(o.subject_id.as_str()).or_default().push(o);
        }
        for v in ix.vitals.values_mut().chain(ix.labs.values_mut()) {
            v.sort_by_key(|e| e.charttime);
        }
        ix
    }

    pub fn stay(&self, stay_id: &str) -> Option<&'a StayRecord> {
        self.stays.get(stay_id).copied()
    }

    pub fn admission(&self, hadm_id: Option<&str>) -> Option<&'a OutcomeRecord> {
        hadm_id.and_then(|h| self.admissions.get(h).copied())
    }

    /// Earliest recorded date of death of a subject.
    pub fn dod(&self, subject_id: &str) -> Option<Timestamp> {
        self.dod.get(subject_id).copied()
    }

    /// Vital signs of a stay, sorted by time.
    pub fn vitals(&self, stay_id: &str) -> &[&'a EventRecord] {
        self.vitals.get(stay_id).map_or(&[], Vec::as_slice)
    }

    /// Labs of a subject, sorted by time.
    pub fn labs(&self, subject_id: &str) -> &[&'a EventRecord] {
        self.labs.get(subject_id).map_or(&[], Vec::as_slice)
    }

    pub fn meds(&self, stay_id: &str) -> &[&'a MedRecord] {
        self.meds.get(stay_id).map_or(&[], Vec::as_slice)
    }

    pub fn procedures(&self, hadm_id: Option<&str>) -> &[&'a CodedEventRecord] {
        hadm_id.and_then(|h| self.procedures.get(h)).map_or(&[], Vec::as_slice)
    }

    pub fn ed_diagnoses(&self, stay_id: &str) -> &[&'a CodedEventRecord] {
        self.dx_ed.get(stay_id).map_or(&[], Vec::as_slice)
    }

    pub fn hosp_diagnoses(&self, hadm_id: Option<&str>) -> &[&'a CodedEventRecord] {
        hadm_id.and_then(|h| self.dx_hosp.get(h)).map_or(&[], Vec::as_slice)
    }

    pub fn biometrics(&self, subject_id: &str) -> &[&'a BiometricRecord] {
        self.omr.get(subject_id).map_or(&[], Vec::as_slice)
    }
}
