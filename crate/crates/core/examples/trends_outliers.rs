//! Trend statistics over a short vital-sign series, plus outlier screening
//! and unit conversion of raw measurements.

use edbench::features::{aggregate_trends, clean_measurement, convert, OutlierRuleSet, STATISTICS};
use edbench::ingest::VariableRegistry;

fn main() {
    // Heart rate at 0, 30 and 60 minutes.
    let series = [(0.0, 80.0), (30.0, 90.0), (60.0, 100.0)];
    let agg = aggregate_trends(&series);
    for stat in STATISTICS {
        match agg.get(stat).flatten() {
            Some(v) => println!("{stat:>15} = {v:.4}"),
            None => println!("{stat:>15} = missing"),
        }
    }

    let registry = VariableRegistry::builtin();
    let rules = OutlierRuleSet::from_registry(&registry);
    println!();
    for (var, value, unit) in [
        ("heartrate", 700.0, "bpm"),
        ("heartrate", 700.01, "bpm"),
        ("o2sat", 100.0, "%"),
        ("glucose", 2000.01, "mg/dL"),
        ("weight", 19.9, "kg"),
        ("weight", 154.0, "lb"),
        ("temperature", 98.6, "°F"),
        ("temperature", 160.0, "F"),
    ] {
        let cleaned = clean_measurement(&registry, &rules, var, value, unit);
        println!("{var:>12} {value:>8} {unit:<6} -> {cleaned:?}");
    }
    println!("\n70 in = {:?} cm; mmol/L to mg/dL is unsupported: {:?}", convert(70.0, "in", "cm"), convert(5.0, "mmol/L", "mg/dL"));
}
