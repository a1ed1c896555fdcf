//! Sources to a saved dataset: samples, features, labels and
//! patient-stratified folds, then median imputation fitted on training rows.
//!
//! Usage: `cargo run --example build_dataset -- [work_dir]`

use std::collections::BTreeSet;

use edbench::dataset::{build_dataset, save_dataset, BuildConfig};
use edbench::impute::fit_imputer;
use edbench::ingest::{SourceTables, VariableRegistry};
use edbench::labels::{DeteriorationSpec, LabelKind};
use edbench::splits::Role;
use edbench::synthgen::{generate_fixture, SynthConfig};

fn main() -> edbench::Result<()> {
    let work = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("edbench-example-build"));
    let (sources, out) = (work.join("sources"), work.join("dataset"));
    let registry = VariableRegistry::builtin();
    let synth = SynthConfig {
        n_patients: 400,
        sampling_rate: 50.0,
        ..Default::default()
    };
    generate_fixture(&synth, &registry, &sources)?;

    let tables = SourceTables::load(&sources, &registry)?;
    let cfg = BuildConfig {
        min_count: 5,
        ..Default::default()
    };
    let ds = build_dataset(&tables, &sources, &registry, &DeteriorationSpec::builtin(), &cfg)?;
    let space = &ds.labels.space;
    println!(
        "{} samples; {} diagnosis and {} deterioration labels; {} numeric columns",
        ds.samples.len(),
        space.indices(LabelKind::Diagnosis).len(),
        space.indices(LabelKind::Deterioration).len(),
        ds.features.numeric.ncols()
    );

    let roles = ds.roles();
    let mut subjects = Vec::new();
    for role in [Role::Train, Role::Val, Role::Test] {
        let rows = roles.select(&ds.samples, role);
        let s: BTreeSet<_> = rows.iter().map(|&i| ds.samples[i].subject_id.clone()).collect();
        println!("{role:?}: {} rows from {} patients", rows.len(), s.len());
        subjects.push(s);
    }
    let overlap = subjects[0].intersection(&subjects[2]).count() + subjects[1].intersection(&subjects[2]).count();
    println!("patients shared with the test fold: {overlap}");

    let train = roles.select(&ds.samples, Role::Train);
    let names = &ds.features.layout.numeric;
    let x = ds.features.numeric.select(ndarray::Axis(0), &train);
    let imputer = fit_imputer(names, x.view())?;
    let (filled, mask) = imputer.apply(names, ds.features.numeric.view(), true)?;
    let mask = mask.expect("mask requested");
    println!(
        "imputed {} of {} numeric cells; any NaN left: {}",
        mask.sum() as usize,
        mask.len(),
        filled.iter().any(|v| v.is_nan())
    );

    let manifest = save_dataset(&ds, &cfg, &out)?;
    println!("saved {} files to {}", manifest.artifacts.values().map(Vec::len).sum::<usize>(), out.display());
    Ok(())
}
