//! The window rule behind every deterioration target, whole-word drug
//! matching, ICD code propagation and the bundled target list.

use edbench::labels::deterioration::{mentions_drug, window_label};
use edbench::labels::{normalize_icd, truncate_and_propagate, DeteriorationSpec, IcdMap};
use edbench::time::HOUR;

fn main() -> edbench::Result<()> {
    let arrival = 0;
    let window_end = 2 * HOUR;
    let end = 24 * HOUR;
    let cases = [
        ("no event", vec![]),
        ("event before arrival only", vec![-HOUR]),
        ("first event inside the feature window", vec![HOUR, 5 * HOUR]),
        ("event after the window, before the horizon", vec![5 * HOUR]),
        ("event on the horizon", vec![end]),
        ("event after the horizon", vec![end + 1]),
    ];
    for (what, times) in cases {
        println!("{what:<46} {:?}", window_label(times, arrival, window_end, end));
    }

    println!();
    for med in ["Norepinephrine 4 mg/250 mL", "Epinephrine-Lidocaine topical", "Norepinephrinex"] {
        println!("{med:<32} mentions norepinephrine: {}", mentions_drug(med, "norepinephrine"));
    }

    println!();
    let mut map = IcdMap::new();
    map.insert("410.01", "I21.09");
    for (code, version) in [("I2109", 10u8), ("41001", 9), ("99999", 9)] {
        for c in normalize_icd(code, version, &map) {
            println!("ICD-{version} {code} -> {:?}", truncate_and_propagate(&c)?);
        }
    }

    println!();
    for t in DeteriorationSpec::builtin().targets {
        println!("{:<28} {}", t.name, t.category.display());
    }
    Ok(())
}
