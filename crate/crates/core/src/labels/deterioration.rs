//! The fifteen deterioration targets, driven by a JSON criteria file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Ternary;
use crate::cohort::Sample;
use crate::error::{Error, Result};
use crate::features::OutlierRuleSet;
use crate::ingest::{CodedEventRecord, EventRecord, MedRecord, OutcomeRecord, SourceIndex};
use crate::time::{day_of, Timestamp, HOUR};

const BUILTIN: &str = include_str!("../../data/deterioration.json");
pub const TARGET_COUNT: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    ClinicalDeterioration,
    Icu,
    Mortality,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::ClinicalDeterioration, Category::Icu, Category::Mortality];

    pub fn display(self) -> &'static str {
        match self {
            Category::ClinicalDeterioration => "Clinical deterioration",
            Category::Icu => "ICU admission",
            Category::Mortality => "Mortality",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeSource {
    Procedures,
    DiagnosesEd,
    DiagnosesHosp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Criterion {
    /// A reading of `variable` at or below `at_most`.
    VitalThreshold {
        variable: String,
        at_most: f64,
        horizon_hours: f64,
    },
    /// A listed code dated no later than `max_day_offset` days after the
    /// arrival date.
    CodedEvent {
        sources: Vec<CodeSource>,
        codes: Vec<String>,
        max_day_offset: i64,
    },
    /// Administration of a listed drug.
    Medication { drugs: Vec<String>, horizon_hours: f64 },
    /// ICU admission; without a horizon, anywhere in the linked stay.
    Icu {
        #[serde(default)]
        horizon_hours: Option<f64>,
    },
    /// Death; without a horizon, before final discharge.
    Mortality {
        #[serde(default)]
        horizon_hours: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub name: String,
    pub display: String,
    pub category: Category,
    pub criterion: Criterion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeteriorationSpec {
    pub targets: Vec<Target>,
}

impl DeteriorationSpec {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("bundled deterioration spec is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let spec: DeteriorationSpec = serde_json::from_str(text)?;
        if spec.targets.len() != TARGET_COUNT {
            return Err(Error::Config(format!(
                "deterioration spec has {} targets, expected {TARGET_COUNT}",
                spec.targets.len()
            )));
        }
        for t in &spec.targets {
            let h = match &t.criterion {
                Criterion::VitalThreshold { horizon_hours, .. } | Criterion::Medication { horizon_hours, .. } => {
                    Some(*horizon_hours)
                }
                Criterion::Icu { horizon_hours } | Criterion::Mortality { horizon_hours } => *horizon_hours,
                Criterion::CodedEvent { max_day_offset, .. } => Some(*max_day_offset as f64 + 1.0),
            };
            if h.is_some_and(|h| !(h > 0.0)) {
                return Err(Error::Config(format!("target `{}` has a non-positive horizon", t.name)));
            }
        }
        Ok(spec)
    }

    pub fn names(&self) -> Vec<String> {
        self.targets.iter().map(|t| t.name.clone()).collect()
    }
}

fn horizon(arrival: Timestamp, hours: f64) -> Timestamp {
    arrival + (hours * HOUR as f64).round() as Timestamp
}

/// The shared window rule. Only events at or after arrival count; if the
/// earliest falls inside the feature window the target is masked, else it is
/// positive when it falls by `end`.
pub fn window_label(
    times: impl IntoIterator<Item = Timestamp>,
    arrival: Timestamp,
    window_end: Timestamp,
    end: Timestamp,
) -> Ternary {
    match times.into_iter().filter(|&t| t >= arrival).min() {
        None => Ternary::Negative,
        Some(t) if t <= window_end => Ternary::Masked,
        Some(t) => Ternary::from_bool(t <= end),
    }
}

/// Whole-word, case-insensitive match of a drug name against a dispensed
/// medication description.
pub fn mentions_drug(medication: &str, drug: &str) -> bool {
    let drug = drug.to_lowercase();
    medication
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .any(|w| w == drug)
}

pub fn medication_label(sample: &Sample, meds: &[&MedRecord], drugs: &[String], hours: f64) -> Ternary {
    let times = meds
        .iter()
        .filter(|m| drugs.iter().any(|d| mentions_drug(&m.name, d)))
        .map(|m| m.charttime);
    window_label(times, sample.arrival, sample.window_end, horizon(sample.arrival, hours))
}

/// `vitals` must be outlier-filtered readings of the stay.
pub fn vital_threshold_label(
    sample: &Sample,
    vitals: &[&EventRecord],
    variable: &str,
    at_most: f64,
    hours: f64,
) -> Ternary {
    let times = vitals
        .iter()
        .filter(|e| e.variable == variable && e.value <= at_most)
        .map(|e| e.charttime);
    window_label(times, sample.arrival, sample.window_end, horizon(sample.arrival, hours))
}

/// Date-granular events are never masked: same or next day is positive.
pub fn coded_event_label(sample: &Sample, events: &[&CodedEventRecord], codes: &[String], max_day_offset: i64) -> Ternary {
    let day = day_of(sample.arrival);
    Ternary::from_bool(events.iter().any(|e| {
        codes.iter().any(|c| *c == e.icd_code)
            && e.event_date.is_some_and(|d| (0..=max_day_offset).contains(&(d - day)))
    }))
}

pub fn icu_label(sample: &Sample, admission: Option<&OutcomeRecord>, hours: Option<f64>) -> Ternary {
    let Some(adm) = admission else {
        return Ternary::Negative;
    };
    let end = match hours {
        Some(h) => horizon(sample.arrival, h),
        None => adm.dischtime,
    };
    window_label(
        adm.icu_intervals.iter().map(|iv| iv.0),
        sample.arrival,
        sample.window_end,
        end,
    )
}

/// Mortality is never masked. Without a horizon the target is death before
/// final discharge (hospital discharge, or ED departure when the visit had
/// no admission).
pub fn mortality_label(
    sample: &Sample,
    dod: Option<Timestamp>,
    discharge: Timestamp,
    hours: Option<f64>,
) -> Result<Ternary> {
    let Some(dod) = dod else {
        return Ok(Ternary::Negative);
    };
    if day_of(dod) < day_of(sample.arrival) {
        return Err(Error::Data(format!(
            "sample {}: date of death precedes arrival",
            sample.sample_id
        )));
    }
    let dod = dod.max(sample.arrival);
    Ok(Ternary::from_bool(match hours {
        Some(h) => dod <= horizon(sample.arrival, h),
        None => dod <= discharge,
    }))
}

/// All targets of one sample, in spec order.
pub fn deterioration_labels(
    sample: &Sample,
    spec: &DeteriorationSpec,
    index: &SourceIndex,
    rules: &OutlierRuleSet,
) -> Result<Vec<Ternary>> {
    let admission = index.admission(sample.hadm_id.as_deref());
    let stay = index.stay(&sample.stay_id);
    let discharge = admission
        .map(|a| a.dischtime)
        .or(stay.map(|s| s.outtime))
        .unwrap_or(sample.window_end);
    let vitals: Vec<&EventRecord> = index
        .vitals(&sample.stay_id)
        .iter()
        .copied()
        .filter(|e| rules.accepts(&e.variable, e.value, &e.unit))
        .collect();
    spec.targets
        .iter()
        .map(|t| {
            Ok(match &t.criterion {
                Criterion::VitalThreshold {
                    variable,
                    at_most,
                    horizon_hours,
                } => vital_threshold_label(sample, &vitals, variable, *at_most, *horizon_hours),
                Criterion::CodedEvent {
                    sources,
                    codes,
                    max_day_offset,
                } => {
                    let mut events: Vec<&CodedEventRecord> = Vec::new();
                    for s in sources {
                        events.extend_from_slice(match s {
                            CodeSource::Procedures => index.procedures(sample.hadm_id.as_deref()),
                            CodeSource::DiagnosesEd => index.ed_diagnoses(&sample.stay_id),
                            CodeSource::DiagnosesHosp => index.hosp_diagnoses(sample.hadm_id.as_deref()),
                        });
                    }
                    coded_event_label(sample, &events, codes, *max_day_offset)
                }
                Criterion::Medication { drugs, horizon_hours } => {
                    medication_label(sample, index.meds(&sample.stay_id), drugs, *horizon_hours)
                }
                Criterion::Icu { horizon_hours } => icu_label(sample, admission, *horizon_hours),
                Criterion::Mortality { horizon_hours } => {
                    mortality_label(sample, index.dod(&sample.subject_id), discharge, *horizon_hours)?
                }
            })
        })
        .collect()
}
