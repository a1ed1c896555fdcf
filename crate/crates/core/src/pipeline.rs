//! Experiment configuration and the five pipeline commands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dataset::{build_dataset, load_dataset, save_dataset, BuildConfig, BuildManifest};
use crate::error::{Error, Result};
use crate::eval::{evaluate, improvement_table, BootstrapConfig, EvalReport};
use crate::ingest::{SourceTables, VariableRegistry, WaveformStore};
use crate::labels::DeteriorationSpec;
use crate::models::{fit_model, role_rows, score_model, Checkpoint, FittedModel, ModelConfig, Profile, Scenario};
use crate::splits::Role;
use crate::synthgen::{generate_fixture, FixtureManifest, SynthConfig};

/// Environment variable that replaces `data_root` from the config file.
pub const DATA_ROOT_ENV: &str = "EDBENCH_DATA_ROOT";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const TRAIN_LOG_FILE: &str = "train_log.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";
pub const SCORES_FILE: &str = "scores.csv";
pub const COMPARISON_TEXT: &str = "comparison.txt";
pub const COMPARISON_JSON: &str = "comparison.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Base for the relative paths below.
    pub data_root: PathBuf,
    /// Source tables and waveform store.
    pub sources: PathBuf,
    /// Built dataset artifacts.
    pub dataset: PathBuf,
    /// Checkpoints and reports, one subdirectory per scenario.
    pub output: PathBuf,
    pub registry: Option<PathBuf>,
    pub deterioration_spec: Option<PathBuf>,
    pub scenarios: Vec<Scenario>,
    pub profile: Profile,
    /// Copied into every stage that draws random numbers.
    pub seed: u64,
    pub mask_columns: bool,
    pub synth: SynthConfig,
    pub build: BuildConfig,
    /// Merged over the profile's model configuration.
    pub model: Value,
    pub bootstrap: BootstrapConfig,
    /// Scenario pairs `(a, b)` whose relative improvement of `a` over `b`
    /// is tabulated by `report`.
    pub compare: Vec<(Scenario, Scenario)>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data_root: PathBuf::from("."),
            sources: PathBuf::from("sources"),
            dataset: PathBuf::from("dataset"),
            output: PathBuf::from("runs"),
            registry: None,
            deterioration_spec: None,
            scenarios: Scenario::ALL.to_vec(),
            profile: Profile::Desk,
            seed: 7,
            mask_columns: true,
            synth: SynthConfig::default(),
            build: BuildConfig::default(),
            model: Value::Object(Default::default()),
            bootstrap: BootstrapConfig::default(),
            compare: vec![
                (Scenario::WaveRoutineDeep, Scenario::RoutineTree),
                (Scenario::WaveRoutineDeep, Scenario::WaveDeep),
            ],
        }
    }
}

fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p.clone(),
    }
}

impl ExperimentConfig {
    /// Reads a config file; a relative `data_root` is taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if cfg.data_root.is_relative() {
            let dir = path.parent().unwrap_or(Path::new("."));
            cfg.data_root = dir.join(&cfg.data_root);
        }
        Ok(cfg)
    }

    /// Applies the data-root environment override.
    pub fn with_env(mut self) -> Self {
        if let Some(root) = std::env::var_os(DATA_ROOT_ENV).filter(|v| !v.is_empty()) {
            self.data_root = PathBuf::from(root);
        }
        self
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.data_root.join(p)
        }
    }

    pub fn sources_dir(&self) -> PathBuf {
        self.resolve(&self.sources)
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.resolve(&self.dataset)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output)
    }

    pub fn scenario_dir(&self, s: Scenario) -> PathBuf {
        self.output_dir().join(s.name())
    }

    pub fn registry(&self) -> Result<VariableRegistry> {
        match &self.registry {
            Some(p) => VariableRegistry::from_file(&self.resolve(p)),
            None => Ok(VariableRegistry::builtin()),
        }
    }

    pub fn deterioration(&self) -> Result<DeteriorationSpec> {
        match &self.deterioration_spec {
            Some(p) => DeteriorationSpec::load(&self.resolve(p)),
            None => Ok(DeteriorationSpec::builtin()),
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            seed: self.seed,
            ..self.synth.clone()
        }
    }

    pub fn build_config(&self) -> BuildConfig {
        let mut b = self.build.clone();
        b.seed = self.seed;
        for p in [&mut b.vocab_file, &mut b.icd_map, &mut b.fold_file].into_iter().flatten() {
            *p = self.resolve(p);
        }
        b
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let mut v = serde_json::to_value(ModelConfig::for_profile(self.profile))?;
        merge(&mut v, &self.model);
        let mut m: ModelConfig =
            serde_json::from_value(v).map_err(|e| Error::Config(format!("model section: {e}")))?;
        m.deep.seed = self.seed;
        m.mask_columns = self.mask_columns;
        m.validate()?;
        Ok(m)
    }

    pub fn bootstrap_config(&self) -> BootstrapConfig {
        BootstrapConfig {
            seed: self.seed,
            ..self.bootstrap
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::Config("no scenarios selected".into()));
        }
        self.model_config().map(|_| ())
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_synth(cfg: &ExperimentConfig) -> Result<FixtureManifest> {
    let dir = cfg.sources_dir();
    info!("writing synthetic sources to {}", dir.display());
    generate_fixture(&cfg.synth_config(), &cfg.registry()?, &dir).map_err(|e| e.in_stage("synth"))
}

pub fn cmd_build(cfg: &ExperimentConfig) -> Result<BuildManifest> {
    let sources = cfg.sources_dir();
    let registry = cfg.registry()?;
    let tables = SourceTables::load(&sources, &registry).map_err(|e| e.in_stage("ingest"))?;
    let build = cfg.build_config();
    let ds = build_dataset(&tables, &sources, &registry, &cfg.deterioration()?, &build)?;
    save_dataset(&ds, &build, &cfg.dataset_dir())
}

/// Summary of one training run written next to the checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub scenario: Scenario,
    pub n_labels: usize,
    pub n_models: usize,
    pub skipped: Vec<String>,
    pub best_epoch: Option<usize>,
    pub history: Vec<crate::models::EpochLog>,
}

pub fn cmd_train(cfg: &ExperimentConfig, scenario: Scenario) -> Result<TrainLog> {
    let registry = cfg.registry()?;
    let model_cfg = cfg.model_config()?;
    let (ds, _) = load_dataset(&cfg.dataset_dir(), &registry).map_err(|e| e.in_stage("load"))?;
    let store = WaveformStore::open(&cfg.sources_dir())?;
    info!("training {scenario}");
    let ckpt = fit_model(scenario.spec(), &ds, Some(&store), &model_cfg).map_err(|e| e.in_stage("train"))?;
    let dir = cfg.scenario_dir(scenario);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    ckpt.save(&dir.join(CHECKPOINT_FILE))?;
    let (n_models, best_epoch, history) = match &ckpt.model {
        FittedModel::Tree { boosters, .. } => (boosters.iter().flatten().count(), None, Vec::new()),
        FittedModel::Deep {
            best_epoch, history, ..
        } => (ckpt.label_names.len(), Some(*best_epoch), history.clone()),
    };
    let log = TrainLog {
        scenario,
        n_labels: ckpt.label_names.len(),
        n_models,
        skipped: ckpt.skipped_labels().to_vec(),
        best_epoch,
        history,
    };
    write_json(&dir.join(TRAIN_LOG_FILE), &log)?;
    Ok(log)
}

/// Scores the first record of every test-fold visit and writes the report
/// as JSON and text.
pub fn cmd_eval(cfg: &ExperimentConfig, scenario: Scenario) -> Result<EvalReport> {
    let registry = cfg.registry()?;
    let dir = cfg.scenario_dir(scenario);
    let ckpt = Checkpoint::load(&dir.join(CHECKPOINT_FILE))?;
    let (ds, _) = load_dataset(&cfg.dataset_dir(), &registry).map_err(|e| e.in_stage("load"))?;
    let store = WaveformStore::open(&cfg.sources_dir())?;
    let rows = role_rows(&ds, Role::Test, true);
    if rows.is_empty() {
        return Err(Error::Data("test fold has no first-of-visit records".into()));
    }
    let scores = score_model(&ckpt, &ds, Some(&store), &rows).map_err(|e| e.in_stage("score"))?;
    let labels: Vec<Vec<_>> = (0..ds.labels.width())
        .map(|j| rows.iter().map(|&i| ds.labels.get(i, j)).collect())
        .collect();
    let report = evaluate(
        scenario.name(),
        &ds.labels.space,
        &scores.columns(),
        &labels,
        &cfg.deterioration()?,
        cfg.bootstrap_config(),
    )
    .map_err(|e| e.in_stage("eval"))?;
    write_scores(&dir.join(SCORES_FILE), &scores)?;
    write_json(&dir.join(REPORT_JSON), &report)?;
    write_text(&dir.join(REPORT_TEXT), &report.to_text())?;
    Ok(report)
}

fn write_scores(path: &Path, scores: &crate::models::ScoreMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["sample_id".to_string()];
    header.extend(scores.label_names.iter().cloned());
    w.write_record(&header)?;
    for (id, row) in scores.sample_ids.iter().zip(&scores.scores) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One line per scenario in the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scenario: Scenario,
    pub description: String,
    pub diagnoses: crate::eval::Interval,
    pub deterioration: crate::eval::Interval,
}

/// Scenario table plus relative-improvement tables for the configured
/// pairs. Pairs with a missing report are left out.
pub fn compare_reports(reports: &BTreeMap<Scenario, EvalReport>, pairs: &[(Scenario, Scenario)]) -> Result<(String, Vec<ComparisonRow>)> {
    let mut out = String::new();
    let _ = writeln!(out, "{:<46} {:<26} {:<26}", "scenario", "diagnoses (95% CI)", "deterioration (95% CI)");
    let ci = |i: crate::eval::Interval| format!("{:.4} ({:.4}, {:.4})", i.point, i.lo, i.hi);
    let mut rows = Vec::new();
    for s in Scenario::ALL {
        let Some(r) = reports.get(&s) else { continue };
        let _ = writeln!(
            out,
            "{:<46} {:<26} {:<26}",
            s.description(),
            ci(r.diagnoses.macro_auroc),
            ci(r.deterioration.macro_auroc)
        );
        rows.push(ComparisonRow {
            scenario: s,
            description: s.description().into(),
            diagnoses: r.diagnoses.macro_auroc,
            deterioration: r.deterioration.macro_auroc,
        });
    }
    for (a, b) in pairs {
        if let (Some(ra), Some(rb)) = (reports.get(a), reports.get(b)) {
            let _ = writeln!(out, "\nrelative improvement of {a} over {b}");
            out.push_str(&improvement_table(ra, rb)?);
        }
    }
    Ok((out, rows))
}

pub fn cmd_report(cfg: &ExperimentConfig) -> Result<String> {
    let mut reports = BTreeMap::new();
    for &s in &cfg.scenarios {
        let path = cfg.scenario_dir(s).join(REPORT_JSON);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        reports.insert(s, serde_json::from_str::<EvalReport>(&text)?);
    }
    let (text, rows) = compare_reports(&reports, &cfg.compare)?;
    let out = cfg.output_dir();
    write_text(&out.join(COMPARISON_TEXT), &text)?;
    write_json(&out.join(COMPARISON_JSON), &rows)?;
    Ok(text)
}
