//! The whole workflow in one process: synthesize sources, build the dataset,
//! train and evaluate two scenarios and write the comparison.
//!
//! Usage: `cargo run --release --example pipeline -- [work_dir]`

use edbench::models::Scenario;
use edbench::pipeline::{cmd_build, cmd_eval, cmd_report, cmd_synth, cmd_train, ExperimentConfig};
use edbench::splits::FoldRoles;
use serde_json::json;

fn main() -> edbench::Result<()> {
    let root = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("edbench-example-pipeline"));
    let mut cfg = ExperimentConfig {
        data_root: root,
        scenarios: vec![Scenario::RoutineTree, Scenario::WaveRoutineDeep],
        compare: vec![(Scenario::WaveRoutineDeep, Scenario::RoutineTree)],
        model: json!({
            "tree": {"n_trees": 20},
            "deep": {"epochs": 2, "d_model": 16, "sampling_rate_target": 25}
        }),
        ..Default::default()
    };
    cfg.synth.n_patients = 300;
    cfg.synth.sampling_rate = 50.0;
    cfg.build.min_count = 5;
    cfg.build.folds = FoldRoles {
        n_folds: 10,
        val_fold: 8,
        test_fold: 9,
    };
    cfg.bootstrap.n_iter = 200;
    cfg.validate()?;

    let fixture = cmd_synth(&cfg)?;
    println!("synth: {} patients, {} ECGs", fixture.patients, fixture.ecgs);
    let built = cmd_build(&cfg)?;
    println!("build: {} samples, {} labels", built.samples, built.labels);
    for &s in &cfg.scenarios.clone() {
        let log = cmd_train(&cfg, s)?;
        let report = cmd_eval(&cfg, s)?;
        println!(
            "{s}: {} models, diagnosis macro AUROC {:.4} on {} rows",
            log.n_models, report.diagnoses.macro_auroc.point, report.n_rows
        );
    }
    println!("\n{}", cmd_report(&cfg)?);
    Ok(())
}
