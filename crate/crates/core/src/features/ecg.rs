use std::collections::BTreeMap;

use crate::ingest::MACHINE_FEATURES;

/// The eight machine measurements in fixed order; absent keys are NaN.
pub fn extract_ecg_features(machine: Option<&BTreeMap<String, f64>>) -> [f64; 8] {
    let mut out = [f64::NAN; 8];
    if let Some(m) = machine {
        for (slot, key) in out.iter_mut().zip(MACHINE_FEATURES) {
            if let Some(v) = m.get(key) {
                *slot = *v;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_through_and_missing() {
        let m: BTreeMap<String, f64> = [("rr_interval".to_string(), 800.0)].into_iter().collect();
        let f = extract_ecg_features(Some(&m));
        assert_eq!(f[0], 800.0);
        assert!(f[7].is_nan());
        assert!(extract_ecg_features(None).iter().all(|v| v.is_nan()));
    }
}
