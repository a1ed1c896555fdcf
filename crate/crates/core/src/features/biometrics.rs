//! Height, weight and BMI nearest to arrival from the outpatient record.

use super::outliers::{clean_measurement, OutlierRuleSet};
use crate::ingest::{BiometricRecord, VariableRegistry};
use crate::time::{day_of, Timestamp};

pub const BIOMETRICS: [&str; 3] = ["height", "weight", "bmi"];
pub const MAX_DAYS: i64 = 30;

/// Canonical biometric for an outpatient-record result name, e.g.
/// "Weight (Lbs)" -> "weight".
pub fn biometric_name(result_name: &str) -> Option<&'static str> {
    let n = result_name.trim().to_ascii_lowercase();
    BIOMETRICS.into_iter().find(|b| n.starts_with(b))
}

/// For each of height, weight, BMI: the valid record closest in days to
/// arrival, within 30 days; equal distances go to the earlier record.
pub fn match_biometrics(
    arrival: Timestamp,
    records: &[&BiometricRecord],
    registry: &VariableRegistry,
    rules: &OutlierRuleSet,
) -> [Option<f64>; 3] {
    let day = day_of(arrival);
    let mut best: [Option<(i64, i64, f64)>; 3] = [None; 3];
    for r in records {
        let Some(name) = biometric_name(&r.name) else {
            continue;
        };
        let slot = BIOMETRICS.iter().position(|b| *b == name).expect("known");
        let Some(value) = clean_measurement(registry, rules, name, r.value, &r.unit) else {
            continue;
        };
        let dist = (r.chartdate - day).abs();
        if dist > MAX_DAYS {
            continue;
        }
        let key = (dist, r.chartdate, value);
        match best[slot] {
            Some((d, c, _)) if (d, c) <= (dist, r.chartdate) => {}
            _ => best[slot] = Some(key),
        }
    }
    best.map(|b| b.map(|(_, _, v)| v))
}
