//! Unit normalisation and the three conversions the source tables need.

const LB_TO_KG: f64 = 0.453_592_37;
const IN_TO_CM: f64 = 2.54;

/// Canonical spelling of a unit string: case, spaces and degree signs are
/// ignored and common aliases are folded.
pub fn normalize_unit(unit: &str) -> String {
    let u: String = unit
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '°' && *c != 'º')
        .collect::<String>()
        .to_ascii_lowercase();
    let u = u.strip_prefix("deg").unwrap_or(&u).to_string();
    match u.as_str() {
        "f" | "fahrenheit" => "F".into(),
        "c" | "celsius" => "C".into(),
        "lb" | "lbs" | "pound" | "pounds" => "lb".into(),
        "kg" | "kilogram" | "kilograms" => "kg".into(),
        "in" | "inch" | "inches" => "in".into(),
        "cm" | "centimeter" | "centimeters" => "cm".into(),
        _ => u,
    }
}

/// Converts `value` from unit `from` to unit `to`. An empty `from` is read
/// as already being in `to`. Returns `None` for an unsupported pair.
pub fn convert(value: f64, from: &str, to: &str) -> Option<f64> {
    if from.trim().is_empty() {
        return Some(value);
    }
    let (f, t) = (normalize_unit(from), normalize_unit(to));
    if f == t {
        return Some(value);
    }
    Some(match (f.as_str(), t.as_str()) {
        ("F", "C") => (value - 32.0) * 5.0 / 9.0,
        ("C", "F") => value * 9.0 / 5.0 + 32.0,
        ("lb", "kg") => value * LB_TO_KG,
        ("kg", "lb") => value / LB_TO_KG,
        ("in", "cm") => value * IN_TO_CM,
        ("cm", "in") => value / IN_TO_CM,
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn conversions() {
        assert!(close(convert(98.6, "°F", "C").unwrap(), 37.0));
        assert!((convert(154.3237, "lb", "kg").unwrap() - 70.0).abs() < 1e-4);
        assert!(close(convert(70.0, "in", "cm").unwrap(), 177.8));
        assert_eq!(convert(5.0, "mg/dL", "mg/dL"), Some(5.0));
        assert_eq!(convert(5.0, "", "mg/dL"), Some(5.0));
        assert_eq!(convert(5.0, "mmol/L", "mg/dL"), None);
    }

    #[test]
    fn aliases() {
        assert_eq!(normalize_unit("deg F"), "F");
        assert_eq!(normalize_unit("mm Hg"), "mmhg");
        assert_eq!(normalize_unit("mmHg"), "mmhg");
    }
}
