//! Writes a small synthetic source tree and summarizes the planted truth.
//!
//! Usage: `cargo run --example synth_fixture -- [out_dir]`

use edbench::ingest::VariableRegistry;
use edbench::synthgen::{generate_fixture, read_planted, PlantedLabel, SynthConfig, PLANTED_FILE};

fn main() -> edbench::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("edbench-example-synth"));
    let config = SynthConfig {
        n_patients: 120,
        sampling_rate: 50.0,
        ..Default::default()
    };
    let manifest = generate_fixture(&config, &VariableRegistry::builtin(), &dir)?;
    println!(
        "{} patients, {} stays, {} ECGs in {}",
        manifest.patients,
        manifest.stays,
        manifest.ecgs,
        dir.display()
    );
    println!("{} hashed files", manifest.files.len());

    let planted = read_planted(&dir.join(PLANTED_FILE))?;
    for label in [PlantedLabel::Wave, PlantedLabel::Tab, PlantedLabel::Both] {
        let pos = planted.iter().filter(|v| v.label(label)).count();
        println!("{:>6}: {pos} of {} visits positive", label.code(), planted.len());
    }
    Ok(())
}
