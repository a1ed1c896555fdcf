use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::biometrics::match_biometrics;
use super::ecg::extract_ecg_features;
use super::outliers::{clean_measurement, OutlierRuleSet};
use super::trends::{aggregate_trends, STATISTICS};
use crate::cohort::demographics::{acuity_index, gender_index, race_index};
use crate::cohort::Sample;
use crate::error::{Error, Result};
use crate::ingest::{EventRecord, SourceIndex, VariableRegistry, MACHINE_FEATURES};

pub const CATEGORICAL: [&str; 3] = ["gender", "race", "acuity"];

/// Column order of the feature vector, derived from the variable registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub categorical: Vec<String>,
    /// Clinical-routine columns: age, biometrics, then statistic x vital and
    /// statistic x lab.
    pub numeric: Vec<String>,
    pub ecg: Vec<String>,
    pub registry_hash: String,
}

impl FeatureLayout {
    pub fn from_registry(registry: &VariableRegistry) -> Result<Self> {
        for s in &registry.statistics {
            if !STATISTICS.contains(&s.as_str()) {
                return Err(Error::Config(format!("unknown statistic `{s}` in registry")));
            }
        }
        let mut numeric = vec!["age".to_string()];
        numeric.extend(registry.biometrics.iter().map(|b| b.name.clone()));
        for v in registry.vitals.iter().chain(&registry.labs) {
            for s in &registry.statistics {
                numeric.push(format!("{}_{s}", v.name));
            }
        }
        Ok(Self {
            categorical: CATEGORICAL.iter().map(|s| s.to_string()).collect(),
            numeric,
            ecg: MACHINE_FEATURES.iter().map(|s| format!("ecg_{s}")).collect(),
            registry_hash: registry.hash().to_string(),
        })
    }

    /// Errors listing every expected column absent from `names`.
    pub fn check_columns(&self, names: &[String]) -> Result<()> {
        let missing: Vec<&str> = self
            .categorical
            .iter()
            .chain(&self.numeric)
            .chain(&self.ecg)
            .filter(|n| !names.contains(n))
            .map(String::as_str)
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Data(format!("feature columns missing: {}", missing.join(", "))))
        }
    }
}

/// Features of one sample before imputation; NaN marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub categorical: [usize; 3],
    pub numeric: Vec<f64>,
    pub ecg: [f64; 8],
}

impl FeatureVector {
    /// One bit per numeric column then per ECG column, set where missing.
    pub fn missing_mask(&self) -> Vec<bool> {
        self.numeric.iter().chain(&self.ecg).map(|v| v.is_nan()).collect()
    }
}

/// Inputs shared by every sample's assembly.
pub struct FeatureContext<'a> {
    pub index: &'a SourceIndex<'a>,
    pub registry: &'a VariableRegistry,
    pub rules: &'a OutlierRuleSet,
    pub layout: &'a FeatureLayout,
}

fn window_series(
    events: &[&EventRecord],
    sample: &Sample,
    ctx: &FeatureContext,
    out: &mut BTreeMap<String, Vec<(f64, f64)>>,
) {
    let start = events.partition_point(|e| e.charttime < sample.arrival);
    for e in &events[start..] {
        if e.charttime > sample.window_end {
            break;
        }
        if let Some(v) = clean_measurement(ctx.registry, ctx.rules, &e.variable, e.value, &e.unit) {
            let minutes = (e.charttime - sample.arrival) as f64 / 60.0;
            out.entry(e.variable.clone()).or_default().push((minutes, v));
        }
    }
}

/// Vitals come from the sample's stay and labs from the subject, both
/// restricted to `[arrival, window_end]`.
pub fn assemble_features(
    sample: &Sample,
    ctx: &FeatureContext,
    machine: Option<&BTreeMap<String, f64>>,
) -> FeatureVector {
    let mut series = BTreeMap::new();
    window_series(ctx.index.vitals(&sample.stay_id), sample, ctx, &mut series);
    window_series(ctx.index.labs(&sample.subject_id), sample, ctx, &mut series);
    let bio = match_biometrics(
        sample.arrival,
        ctx.index.biometrics(&sample.subject_id),
        ctx.registry,
        ctx.rules,
    );
    let mut numeric = Vec::with_capacity(ctx.layout.numeric.len());
    numeric.push(sample.age as f64);
    for b in &ctx.registry.biometrics {
        let pos = super::biometrics::BIOMETRICS.iter().position(|n| *n == b.name);
        numeric.push(pos.and_then(|p| bio[p]).unwrap_or(f64::NAN));
    }
    for v in ctx.registry.vitals.iter().chain(&ctx.registry.labs) {
        let agg = series.get(&v.name).map(|s| aggregate_trends(s)).unwrap_or_default();
        for s in &ctx.registry.statistics {
            numeric.push(agg.get(s).flatten().unwrap_or(f64::NAN));
        }
    }
    debug_assert_eq!(numeric.len(), ctx.layout.numeric.len());
    FeatureVector {
        categorical: [
            gender_index(&sample.gender),
            race_index(&sample.race),
            acuity_index(sample.acuity),
        ],
        numeric,
        ecg: extract_ecg_features(machine),
    }
}
