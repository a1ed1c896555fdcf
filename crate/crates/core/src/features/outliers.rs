//! Range rules that turn implausible measurements into missing values.

use std::collections::HashMap;

use log::debug;

use super::units::convert;
use crate::ingest::VariableRegistry;

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierRule {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// Unit the bounds are expressed in.
    pub unit: String,
}

impl OutlierRule {
    /// Bounds are inclusive: only values strictly beyond them are rejected.
    pub fn accepts(&self, value: f64) -> bool {
        self.lower.is_none_or(|lo| value >= lo) && self.upper.is_none_or(|hi| value <= hi)
    }
}

#[derive(Debug, Clone, Default)]
pub struct OutlierRuleSet {
    rules: HashMap<String, OutlierRule>,
}

impl OutlierRuleSet {
    pub fn from_registry(registry: &VariableRegistry) -> Self {
        let rules = registry
            .biometrics
            .iter()
            .chain(&registry.vitals)
            .chain(&registry.labs)
            .filter(|v| v.lower.is_some() || v.upper.is_some())
            .map(|v| {
                (
                    v.name.clone(),
                    OutlierRule {
                        lower: v.lower,
                        upper: v.upper,
                        unit: v.bound_unit.clone().unwrap_or_else(|| v.unit.clone()),
                    },
                )
            })
            .collect();
        Self { rules }
    }

    pub fn rule(&self, variable: &str) -> Option<&OutlierRule> {
        self.rules.get(variable)
    }

    /// Checks a value recorded in `unit` against the rule, after expressing
    /// it in the unit the rule is stated in. Values whose unit cannot be
    /// converted are rejected.
    pub fn accepts(&self, variable: &str, value: f64, unit: &str) -> bool {
        match self.rules.get(variable) {
            None => true,
            Some(rule) => match convert(value, unit, &rule.unit) {
                Some(v) => rule.accepts(v),
                None => false,
            },
        }
    }

    /// `filter_outliers`: offending values become `None`. Values must
    /// already be in the unit the variable's rule is stated in.
    pub fn filter(&self, variable: &str, values: &[Option<f64>]) -> Vec<Option<f64>> {
        let rule = self.rules.get(variable);
        values
            .iter()
            .map(|v| {
                v.filter(|x| {
                    let ok = rule.is_none_or(|r| r.accepts(*x));
                    if !ok {
                        debug!("{variable}: outlier {x} set missing");
                    }
                    ok
                })
            })
            .collect()
    }
}

/// Outlier check then conversion to the variable's canonical unit.
/// `None` means the measurement is treated as missing.
pub fn clean_measurement(
    registry: &VariableRegistry,
    rules: &OutlierRuleSet,
    variable: &str,
    value: f64,
    unit: &str,
) -> Option<f64> {
    let var = registry.get(variable)?;
    if !rules.accepts(variable, value, unit) {
        return None;
    }
    let v = convert(value, unit, &var.unit);
    if v.is_none() {
        debug!("{variable}: unknown unit `{unit}`; value set missing");
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rules() -> (VariableRegistry, OutlierRuleSet) {
        let r = VariableRegistry::builtin();
        let s = OutlierRuleSet::from_registry(&r);
        (r, s)
    }

    #[test]
    fn boundaries() {
        let (_, s) = rules();
        assert!(s.accepts("heartrate", 700.0, "bpm"));
        assert!(!s.accepts("heartrate", 700.01, "bpm"));
        assert!(!s.accepts("heartrate", 750.0, "bpm"));
        assert!(s.accepts("o2sat", 100.0, "%"));
        assert!(!s.accepts("o2sat", 100.5, "%"));
        assert!(s.accepts("glucose", 2000.0, "mg/dL"));
        assert!(!s.accepts("glucose", 2000.01, "mg/dL"));
        assert!(!s.accepts("glucose", 2500.0, "mg/dL"));
        assert!(s.accepts("weight", 20.0, "kg"));
        assert!(!s.accepts("weight", 19.9, "kg"));
    }

    #[test]
    fn temperature_rule_is_in_fahrenheit() {
        let (r, s) = rules();
        assert!(s.accepts("temperature", 50.0, "F"));
        assert!(!s.accepts("temperature", 49.9, "F"));
        assert!(s.accepts("temperature", 37.0, "C"));
        let c = clean_measurement(&r, &s, "temperature", 98.6, "F").unwrap();
        assert!((c - 37.0).abs() < 1e-9);
        assert_eq!(clean_measurement(&r, &s, "temperature", 151.0, "F"), None);
    }

    #[test]
    fn weight_in_pounds_is_checked_in_kilograms() {
        let (r, s) = rules();
        assert!(s.accepts("weight", 44.1, "lb"));
        assert!(!s.accepts("weight", 44.0, "lb"));
        assert!((clean_measurement(&r, &s, "weight", 154.3237, "lb").unwrap() - 70.0).abs() < 1e-4);
    }

    #[test]
    fn filter_is_idempotent() {
        let (_, s) = rules();
        let x = vec![Some(80.0), Some(701.0), None, Some(0.0)];
        let once = s.filter("heartrate", &x);
        assert_eq!(once, vec![Some(80.0), None, None, Some(0.0)]);
        assert_eq!(s.filter("heartrate", &once), once);
    }

    #[test]
    fn unknown_unit_is_missing() {
        let (r, s) = rules();
        assert_eq!(clean_measurement(&r, &s, "heartrate", 80.0, "furlongs"), None);
    }
}
