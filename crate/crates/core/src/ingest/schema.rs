//! Record types of the source tables and their CSV schemas.

use std::fmt;

use csv::StringRecord;

use crate::time::{format_date, format_timestamp, parse_date, parse_timestamp, Day, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TableKind {
    EdStays,
    Triage,
    VitalSign,
    LabEvents,
    Pyxis,
    Procedures,
    DiagnosesEd,
    DiagnosesHosp,
    Admissions,
    IcuStays,
    Omr,
    EcgManifest,
}

impl TableKind {
    pub const ALL: [TableKind; 12] = [
        TableKind::EdStays,
        TableKind::Triage,
        TableKind::VitalSign,
        TableKind::LabEvents,
        TableKind::Pyxis,
        TableKind::Procedures,
        TableKind::DiagnosesEd,
        TableKind::DiagnosesHosp,
        TableKind::Admissions,
        TableKind::IcuStays,
        TableKind::Omr,
        TableKind::EcgManifest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TableKind::EdStays => "edstays",
            TableKind::Triage => "triage",
            TableKind::VitalSign => "vitalsign",
            TableKind::LabEvents => "labevents",
            TableKind::Pyxis => "pyxis",
            TableKind::Procedures => "procedures",
            TableKind::DiagnosesEd => "diagnoses_ed",
            TableKind::DiagnosesHosp => "diagnoses_hosp",
            TableKind::Admissions => "admissions",
            TableKind::IcuStays => "icustays",
            TableKind::Omr => "omr",
            TableKind::EcgManifest => "ecg_manifest",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.csv", self.name())
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Header every file of this kind must carry, in the order the writer
    /// emits it. Readers accept any column order and extra columns.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            TableKind::EdStays => &[
                "subject_id", "hadm_id", "stay_id", "intime", "outtime", "gender", "race", "age",
            ],
            TableKind::Triage => &["subject_id", "stay_id", "acuity"],
            TableKind::VitalSign => &["subject_id", "stay_id", "charttime", "variable", "value", "unit"],
            TableKind::LabEvents => &["subject_id", "hadm_id", "charttime", "variable", "value", "unit"],
            TableKind::Pyxis => &["subject_id", "stay_id", "charttime", "name"],
            TableKind::Procedures => &["subject_id", "hadm_id", "chartdate", "icd_code", "icd_version"],
            TableKind::DiagnosesEd => &["subject_id", "stay_id", "icd_code", "icd_version"],
            TableKind::DiagnosesHosp => &["subject_id", "hadm_id", "icd_code", "icd_version"],
            TableKind::Admissions => &["subject_id", "hadm_id", "admittime", "dischtime", "dod"],
            TableKind::IcuStays => &["subject_id", "hadm_id", "icustay_id", "intime", "outtime"],
            TableKind::Omr => &["subject_id", "chartdate", "result_name", "value", "unit"],
            TableKind::EcgManifest => &["record_id", "subject_id", "ecg_time", "signal_path", "meta_path"],
        }
    }
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Field access for one CSV row with the schema columns already resolved.
pub struct Fields<'a> {
    pub(crate) record: &'a StringRecord,
    pub(crate) index: &'a [usize],
    pub(crate) names: &'static [&'static str],
}

impl<'a> Fields<'a> {
    pub fn raw(&self, col: usize) -> &'a str {
        self.record.get(self.index[col]).unwrap_or("").trim()
    }

    fn name(&self, col: usize) -> &'static str {
        self.names[col]
    }

    pub fn text(&self, col: usize) -> Result<String, String> {
        let v = self.raw(col);
        if v.is_empty() {
            return Err(format!("empty `{}`", self.name(col)));
        }
        Ok(v.to_string())
    }

    pub fn opt_text(&self, col: usize) -> Option<String> {
        let v = self.raw(col);
        (!v.is_empty()).then(|| v.to_string())
    }

    pub fn timestamp(&self, col: usize) -> Result<Timestamp, String> {
        let v = self.raw(col);
        parse_timestamp(v).ok_or_else(|| format!("unparseable timestamp `{v}` in `{}`", self.name(col)))
    }

    pub fn opt_timestamp(&self, col: usize) -> Result<Option<Timestamp>, String> {
        if self.raw(col).is_empty() {
            return Ok(None);
        }
        self.timestamp(col).map(Some)
    }

    pub fn date(&self, col: usize) -> Result<Day, String> {
        let v = self.raw(col);
        parse_date(v)
            .or_else(|| parse_timestamp(v).map(crate::time::day_of))
            .ok_or_else(|| format!("unparseable date `{v}` in `{}`", self.name(col)))
    }

    pub fn number(&self, col: usize) -> Result<f64, String> {
        let v = self.raw(col);
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(format!("non-numeric `{}` value `{v}`", self.name(col))),
        }
    }

    pub fn integer(&self, col: usize) -> Result<i64, String> {
        let v = self.raw(col);
        v.parse::<i64>()
            .map_err(|_| format!("non-integer `{}` value `{v}`", self.name(col)))
    }
}

/// One row type per table kind.
pub trait TableRow: Sized {
    const KIND: TableKind;
    fn parse(f: &Fields) -> Result<Self, String>;
    /// Values in the order of `KIND.columns()`.
    fn to_fields(&self) -> Vec<String>;
}

fn opt(s: &Option<String>) -> String {
    s.clone().unwrap_or_default()
}

fn opt_ts(t: Option<Timestamp>) -> String {
    t.map(format_timestamp).unwrap_or_default()
}

/// Uppercase, dotless form of a code as printed in source tables.
pub fn clean_icd(code: &str) -> String {
    code.trim()
        .chars()
        .filter(|c| *c != '.' && !c.is_whitespace())
        .flat_map(char::to_uppercase)
        .collect()
}

fn icd_fields(f: &Fields, code_col: usize, version_col: usize) -> Result<(String, u8), String> {
    let code = clean_icd(&f.text(code_col)?);
    let version = match f.integer(version_col)? {
        9 => 9,
        10 => 10,
        v => return Err(format!("icd_version must be 9 or 10, got {v}")),
    };
    Ok((code, version))
}

/// An emergency-department visit. `acuity` comes from the triage table.
#[derive(Debug, Clone, PartialEq)]
pub struct StayRecord {
    pub subject_id: String,
    pub hadm_id: Option<String>,
    pub stay_id: String,
    pub intime: Timestamp,
    pub outtime: Timestamp,
    pub gender: String,
    pub race: String,
    pub age: u32,
    pub acuity: Option<u8>,
}

impl TableRow for StayRecord {
    const KIND: TableKind = TableKind::EdStays;

    fn parse(f: &Fields) -> Result<Self, String> {
        let intime = f.timestamp(3)?;
        let outtime = f.timestamp(4)?;
        if intime >= outtime {
            return Err("intime must precede outtime".into());
        }
        let age = f.integer(7)?;
        if age < 0 {
            return Err(format!("negative age {age}"));
        }
        Ok(Self {
            subject_id: f.text(0)?,
            hadm_id: f.opt_text(1),
            stay_id: f.text(2)?,
            intime,
            outtime,
            gender: f.raw(5).to_string(),
            race: f.raw(6).to_string(),
            age: age as u32,
            acuity: None,
        })
    }

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.subject_id.clone(),
            opt(&self.hadm_id),
            self.stay_id.clone(),
            format_timestamp(self.intime),
            format_timestamp(self.outtime),
            self.gender.clone(),
            self.race.clone(),
            self.age.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriageRecord {
    pub subject_id: String,
    pub stay_id: String,
    pub acuity: Option<u8>,
}

impl TableRow for TriageRecord {
    const KIND: TableKind = TableKind::Triage;

    fn parse(f: &Fields) -> Result<Self, String> {
        let acuity = if f.raw(2).is_empty() {
            None
        } else {
            let v = f.number(2)?;
            if v.fract() != 0.0 || !(1.0..=5.0).contains(&v) {
                return Err(format!("acuity must be 1-5, got {v}"));
            }
            Some(v as u8)
        };
        Ok(Self {
            subject_id: f.text(0)?,
            stay_id: f.text(1)?,
            acuity,
        })
    }

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.subject_id.clone(),
            self.stay_id.clone(),
            self.acuity.map(|a| a.to_string()).unwrap_or_default(),
        ]
    }
}

/// A timed measurement: a vital sign (linked by stay) or a lab (linked by
/// admission when known).
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub subject_id: String,
    pub stay_id: Option<String>,
    pub hadm_id: Option<String>,
    pub variable: String,
    pub value: f64,
    pub unit: String,
    pub charttime: Timestamp,
}

/// Vital-sign rows and lab rows share a record type but not a schema.
#[derive(Debug, Clone, PartialEq)]
pub struct VitalRow(pub EventRecord);

#[derive(Debug, Clone, PartialEq)]
pub struct LabRow(pub EventRecord);

impl TableRow for VitalRow {
    const KIND: TableKind = TableKind::VitalSign;

    fn parse(f: &Fields) -> Result<Self, String> {
        Ok(VitalRow(EventRecord {
            subject_id: f.text(0)?,
            stay_id: Some(f.text(1)?),
            hadm_id: None,
            charttime: f.timestamp(2)?,
            variable: f.text(3)?,
            value: f.number(4)?,
            unit: f.raw(5).to_string(),
        }))
    }

    fn to_fields(&self) -> Vec<String> {
        let e = &self.0;
        vec![
            e.subject_id.clone(),
            opt(&e.stay_id),
            format_timestamp(e.charttime),
            e.variable.clone(),
            e.value.to_string(),
            e.unit.clone(),
        ]
    }
}

impl TableRow for LabRow {
    const KIND: TableKind = TableKind::LabEvents;

    fn parse(f: &Fields) -> Result<Self, String> {
        Ok(LabRow(EventRecord {
            subject_id: f.text(0)?,
            stay_id: None,
            hadm_id: f.opt_text(1),
            charttime: f.timestamp(2)?,
            variable: f.text(3)?,
            value: f.number(4)?,
            unit: f.raw(5).to_string(),
        }))
    }

    fn to_fields(&self) -> Vec<String> {
        let e = &self.0;
        vec![
            e.subject_id.clone(),
            opt(&e.hadm_id),
            format_timestamp(e.charttime),
            e.variable.clone(),
            e.value.to_string(),
            e.unit.clone(),
        ]
    }
}

/// A dispensed medication.
#[derive(Debug, Clone, PartialEq)]
pub struct MedRecord {
    pub subject_id: String,
    pub stay_id: String,
    pub charttime: Timestamp,
    pub name: String,
}

impl TableRow for MedRecord {
    const KIND: TableKind = TableKind::Pyxis;

    fn parse(f: &Fields) -> Result<Self, String> {
        Ok(Self {
            subject_id: f.text(0)?,
            stay_id: f.text(1)?,
            charttime: f.timestamp(2)?,
            name: f.text(3)?,
        })
    }

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.subject_id.clone(),
            self.stay_id.clone(),
            format_timestamp(self.charttime),
            self.name.clone(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Link {
    Stay(String),
    Hadm(String),
}

/// A procedure or discharge-diagnosis code. Diagnoses carry no date of their
/// own; it is assigned from the ED or hospital discharge when the tables are
/// linked.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedEventRecord {
    pub subject_id: String,
    pub link: Link,
    pub icd_code: String,
    pub icd_version: u8,
    pub event_date: Option<Day>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcedureRow(pub CodedEventRecord);

#[derive(Debug, Clone, PartialEq)]
pub struct EdDiagnosisRow(pub CodedEventRecord);

#[derive(Debug, Clone, PartialEq)]
pub struct HospDiagnosisRow(pub CodedEventRecord);

fn link_id(link: &Link) -> String {
    match link {
        Link::Stay(s) | Link::Hadm(s) => s.clone(),
    }
}

impl TableRow for ProcedureRow {
    const KIND: TableKind = TableKind::Procedures;

    fn parse(f: &Fields) -> Result<Self, String> {
        let (icd_code, icd_version) = icd_fields(f, 3, 4)?;
        Ok(ProcedureRow(CodedEventRecord {
            subject_id: f.text(0)?,
            link: Link::Hadm(f.text(1)?),
            icd_code,
            icd_version,
            event_date: Some(f.date(2)?),
        }))
    }

    fn to_fields(&self) -> Vec<String> {
        let e = &self.0;
        vec![
            e.subject_id.clone(),
            link_id(&e.link),
            e.event_date.map(format_date).unwrap_or_default(),
            e.icd_code.clone(),
            e.icd_version.to_string(),
        ]
    }
}

impl TableRow for EdDiagnosisRow {
    const KIND: TableKind = TableKind::DiagnosesEd;

    fn parse(f: &Fields) -> Result<Self, String> {
        let (icd_code, icd_version) = icd_fields(f, 2, 3)?;
        Ok(EdDiagnosisRow(CodedEventRecord {
            subject_id: f.text(0)?,
            link: Link::Stay(f.text(1)?),
            icd_code,
            icd_version,
            event_date: None,
        }))
    }

    fn to_fields(&self) -> Vec<String> {
        let e = &self.0;
        vec![
            e.subject_id.clone(),
            link_id(&e.link),
            e.icd_code.clone(),
            e.icd_version.to_string(),
        ]
    }
}

impl TableRow for HospDiagnosisRow {
    const KIND: TableKind = TableKind::DiagnosesHosp;

    fn parse(f: &Fields) -> Result<Self, String> {
        let (icd_code, icd_version) = icd_fields(f, 2, 3)?;
        Ok(HospDiagnosisRow(CodedEventRecord {
            subject_id: f.text(0)?,
            link: Link::Hadm(f.text(1)?),
            icd_code,
            icd_version,
            event_date: None,
        }))
    }

    fn to_fields(&self) -> Vec<String> {
        let e = &self.0;
        vec![
            e.subject_id.clone(),
            link_id(&e.link),
            e.icd_code.clone(),
            e.icd_version.to_string(),
        ]
    }
}

/// A hospital admission with its outcome. ICU intervals are attached from
/// the ICU stays table.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRecord {
    pub subject_id: String,
    pub hadm_id: String,
    pub admittime: Timestamp,
    pub dischtime: Timestamp,
    pub dod: Option<Timestamp>,
    pub icu_intervals: Vec<(Timestamp, Timestamp)>,
}

impl TableRow for OutcomeRecord {
    const KIND: TableKind = TableKind::Admissions;

    fn parse(f: &Fields) -> Result<Self, String> {
        let admittime = f.timestamp(2)?;
        let dischtime = f.timestamp(3)?;
        if admittime >= dischtime {
            return Err("admittime must precede dischtime".into());
        }
        Ok(Self {
            subject_id: f.text(0)?,
            hadm_id: f.text(1)?,
            admittime,
            dischtime,
            dod: f.opt_timestamp(4)?,
            icu_intervals: Vec::new(),
        })
    }

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.subject_id.clone(),
            self.hadm_id.clone(),
            format_timestamp(self.admittime),
            format_timestamp(self.dischtime),
            opt_ts(self.dod),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcuStayRecord {
    pub subject_id: String,
    pub hadm_id: String,
    pub icustay_id: String,
    pub intime: Timestamp,
    pub outtime: Timestamp,
}

impl TableRow for IcuStayRecord {
    const KIND: TableKind = TableKind::IcuStays;

    fn parse(f: &Fields) -> Result<Self, String> {
        let intime = f.timestamp(3)?;
        let outtime = f.timestamp(4)?;
        if intime > outtime {
            return Err("ICU intime after outtime".into());
        }
        Ok(Self {
            subject_id: f.text(0)?,
            hadm_id: f.text(1)?,
            icustay_id: f.text(2)?,
            intime,
            outtime,
        })
    }

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.subject_id.clone(),
            self.hadm_id.clone(),
            self.icustay_id.clone(),
            format_timestamp(self.intime),
            format_timestamp(self.outtime),
        ]
    }
}

/// Height, weight or BMI from the outpatient medical record.
#[derive(Debug, Clone, PartialEq)]
pub struct BiometricRecord {
    pub subject_id: String,
    pub chartdate: Day,
    pub name: String,
    pub value: f64,
    pub unit: String,
}

impl TableRow for BiometricRecord {
    const KIND: TableKind = TableKind::Omr;

    fn parse(f: &Fields) -> Result<Self, String> {
        Ok(Self {
            subject_id: f.text(0)?,
            chartdate: f.date(1)?,
            name: f.text(2)?,
            value: f.number(3)?,
            unit: f.raw(4).to_string(),
        })
    }

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.subject_id.clone(),
            format_date(self.chartdate),
            self.name.clone(),
            self.value.to_string(),
            self.unit.clone(),
        ]
    }
}

/// Manifest row of the waveform store. Paths are relative to the store
/// directory.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgManifestRecord {
    pub record_id: String,
    pub subject_id: String,
    pub ecg_time: Timestamp,
    pub signal_path: String,
    pub meta_path: String,
}

impl TableRow for EcgManifestRecord {
    const KIND: TableKind = TableKind::EcgManifest;

    fn parse(f: &Fields) -> Result<Self, String> {
        Ok(Self {
            record_id: f.text(0)?,
            subject_id: f.text(1)?,
            ecg_time: f.timestamp(2)?,
            signal_path: f.text(3)?,
            meta_path: f.text(4)?,
        })
    }

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.record_id.clone(),
            self.subject_id.clone(),
            format_timestamp(self.ecg_time),
            self.signal_path.clone(),
            self.meta_path.clone(),
        ]
    }
}
