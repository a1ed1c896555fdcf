//! Loads a source tree, reports per-table diagnostics, links ECGs to stays
//! and prints the cohort summary.
//!
//! Usage: `cargo run --example ingest_cohort -- [source_dir]`

use edbench::cohort::{cohort_stats, link_ecg_to_stays};
use edbench::ingest::{SourceTables, VariableRegistry};
use edbench::synthgen::{generate_fixture, SynthConfig};

fn main() -> edbench::Result<()> {
    let registry = VariableRegistry::builtin();
    let dir = match std::env::args().nth(1) {
        Some(d) => d.into(),
        None => {
            let d = std::env::temp_dir().join("edbench-example-ingest");
            let cfg = SynthConfig {
                n_patients: 150,
                sampling_rate: 50.0,
                ..Default::default()
            };
            generate_fixture(&cfg, &registry, &d)?;
            d
        }
    };
    let tables = SourceTables::load(&dir, &registry)?;
    for r in &tables.reports {
        println!("{:<28} {:>6} rows  {} diagnostics", r.kind.file_name(), r.rows, r.diagnostics.len());
    }

    let samples = link_ecg_to_stays(&tables.stays, &tables.ecgs);
    let first = samples.iter().filter(|s| s.is_first_of_visit).count();
    println!("\n{} ECGs linked, {first} of them first in their visit", samples.len());

    let stats = cohort_stats(&samples)?;
    println!(
        "{} patients, {} visits; age median {:.0} (sd {:.1})",
        stats.patients, stats.visits, stats.age_median, stats.age_sd
    );
    for s in stats.gender.iter().chain(&stats.ethnicity) {
        println!("  {:<10} {:>5} {:>6.1}%", s.name, s.count, s.percent);
    }
    Ok(())
}
