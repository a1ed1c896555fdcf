use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use edbench::models::{Profile, Scenario};
use edbench::pipeline::{cmd_build, cmd_eval, cmd_report, cmd_synth, cmd_train, ExperimentConfig};
use edbench::Result;

#[derive(Parser)]
#[command(name = "edbench", version, about = "ED multimodal prediction benchmark pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_parser = ["desk", "paper"])]
    profile: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic source tables and waveforms.
    Synth,
    /// Build samples, features, labels and folds from sources.
    Build,
    /// Fit one checkpoint per scenario.
    Train {
        /// Scenarios to run instead of those in the config.
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
    },
    /// Score the test fold and write reports.
    Eval {
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
    },
    /// Compare evaluated scenarios.
    Report,
}

fn scenarios(cfg: &ExperimentConfig, names: &[String]) -> Result<Vec<Scenario>> {
    if names.is_empty() {
        return Ok(cfg.scenarios.clone());
    }
    names.iter().map(|n| n.parse()).collect()
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    }
    .with_env();
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(p) = &cli.profile {
        cfg.profile = p.parse::<Profile>()?;
    }
    cfg.validate()?;
    match cli.command {
        Command::Synth => {
            let m = cmd_synth(&cfg)?;
            println!(
                "{}: {} patients, {} stays, {} ECGs, {} files",
                cfg.sources_dir().display(),
                m.patients,
                m.stays,
                m.ecgs,
                m.files.len()
            );
        }
        Command::Build => {
            let m = cmd_build(&cfg)?;
            println!("{}: {} samples, {} labels", cfg.dataset_dir().display(), m.samples, m.labels);
        }
        Command::Train { scenarios: names } => {
            for s in scenarios(&cfg, &names)? {
                let log = cmd_train(&cfg, s)?;
                match log.best_epoch {
                    Some(e) => println!("{s}: selected epoch {e} of {}", log.history.len() - 1),
                    None => println!("{s}: {} label models, {} skipped", log.n_models, log.skipped.len()),
                }
            }
        }
        Command::Eval { scenarios: names } => {
            for s in scenarios(&cfg, &names)? {
                let r = cmd_eval(&cfg, s)?;
                println!(
                    "{s}: diagnoses {:.4}, deterioration {:.4} on {} rows",
                    r.diagnoses.macro_auroc.point, r.deterioration.macro_auroc.point, r.n_rows
                );
            }
        }
        Command::Report => print!("{}", cmd_report(&cfg)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
