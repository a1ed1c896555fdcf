//! Building the benchmark dataset from source tables and reading it back.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cohort::{link_ecg_to_stays, load_samples, save_samples, Sample};
use crate::error::{Error, Result};
use crate::features::{assemble_features, FeatureContext, FeatureLayout, FeatureMatrix, OutlierRuleSet};
use crate::ingest::{SourceIndex, SourceTables, VariableRegistry, WaveformStore};
use crate::labels::{
    build_vocab, deterioration::deterioration_labels, diagnosis_labels, sample_codes, DeteriorationSpec,
    DiagnosisVocab, IcdMap, LabelMatrix, LabelSpace,
};
use crate::splits::{assign_folds, FoldAssignment, FoldRoles};

pub const SAMPLES_FILE: &str = "samples.csv";
pub const FEATURES_FILE: &str = "features.csv";
pub const FEATURES_HEADER: &str = "features.json";
pub const LABELS_FILE: &str = "labels.csv";
pub const LABEL_SPACE_FILE: &str = "labels.json";
pub const FOLDS_FILE: &str = "folds.csv";
pub const BUILD_MANIFEST: &str = "build_manifest.json";
pub const ICD_MAP_FILE: &str = "icd9_to_icd10.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildConfig {
    pub min_count: usize,
    /// Verbatim vocabulary, one code per line, instead of counting.
    pub vocab_file: Option<PathBuf>,
    /// ICD-9 to ICD-10 table; defaults to `icd9_to_icd10.csv` in the source directory.
    pub icd_map: Option<PathBuf>,
    pub folds: FoldRoles,
    /// Precomputed `subject_id,fold` assignment used instead of stratifying.
    pub fold_file: Option<PathBuf>,
    pub seed: u64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            min_count: 10,
            vocab_file: None,
            icd_map: None,
            folds: FoldRoles::default(),
            fold_file: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub features: FeatureMatrix,
    pub labels: LabelMatrix,
    pub folds: FoldAssignment,
}

impl Dataset {
    pub fn roles(&self) -> FoldRoles {
        self.folds.roles
    }
}

fn load_icd_map(sources: &Path, cfg: &BuildConfig) -> Result<IcdMap> {
    let path = cfg.icd_map.clone().unwrap_or_else(|| sources.join(ICD_MAP_FILE));
    if path.exists() {
        IcdMap::load(&path)
    } else {
        warn!("no ICD-9 map at {}; ICD-9 codes will be dropped", path.display());
        Ok(IcdMap::new())
    }
}

/// Sources to samples, features, labels and folds.
pub fn build_dataset(
    tables: &SourceTables,
    sources: &Path,
    registry: &VariableRegistry,
    spec: &DeteriorationSpec,
    cfg: &BuildConfig,
) -> Result<Dataset> {
    let index = SourceIndex::new(tables);
    let mut samples = link_ecg_to_stays(&tables.stays, &tables.ecgs);
    if samples.is_empty() {
        return Err(Error::Data("no ECG falls inside an adult feature window".into()).in_stage("cohort"));
    }
    info!("cohort: {} samples", samples.len());

    let icd = load_icd_map(sources, cfg).map_err(|e| e.in_stage("labels"))?;
    let codes: Vec<Option<_>> = samples
        .iter()
        .map(|s| sample_codes(s, &index, &icd))
        .collect::<Result<_>>()
        .map_err(|e| e.in_stage("labels"))?;
    let vocab = match &cfg.vocab_file {
        Some(p) => DiagnosisVocab::from_file(p),
        None => build_vocab(codes.iter().flatten(), cfg.min_count),
    }
    .map_err(|e| e.in_stage("labels"))?;
    let rules = OutlierRuleSet::from_registry(registry);
    let space = LabelSpace::new(&vocab.codes, &spec.names());
    let mut labels = LabelMatrix::new(space);
    for (s, c) in samples.iter().zip(&codes) {
        let dx = diagnosis_labels(c.as_ref(), &vocab);
        let mut row = dx.values;
        row.extend(deterioration_labels(s, spec, &index, &rules).map_err(|e| e.in_stage("labels"))?);
        labels.push(s.sample_id.clone(), row, dx.no_diagnoses)?;
    }

    let layout = FeatureLayout::from_registry(registry).map_err(|e| e.in_stage("features"))?;
    let store = WaveformStore::new(sources, &tables.ecgs);
    let ctx = FeatureContext {
        index: &index,
        registry,
        rules: &rules,
        layout: &layout,
    };
    let mut vectors = Vec::with_capacity(samples.len());
    for s in &samples {
        let side = store.sidecar(&s.record_id).map_err(|e| e.in_stage("features"))?;
        let machine: BTreeMap<String, f64> =
            side.machine_features.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))).collect();
        vectors.push(assemble_features(s, &ctx, Some(&machine)));
    }
    let ids = samples.iter().map(|s| s.sample_id.clone()).collect();
    let features = FeatureMatrix::from_vectors(layout, ids, &vectors);

    let folds = match &cfg.fold_file {
        Some(p) => FoldAssignment::load(p, cfg.folds),
        None => assign_folds(&samples, &labels, cfg.folds, cfg.seed),
    }
    .map_err(|e| e.in_stage("splits"))?;
    folds.apply(&mut samples).map_err(|e| e.in_stage("splits"))?;
    Ok(Dataset {
        samples,
        features,
        labels,
        folds,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildManifest {
    pub config: BuildConfig,
    pub registry_hash: String,
    pub label_space_hash: String,
    pub samples: usize,
    pub labels: usize,
    pub artifacts: BTreeMap<String, Vec<FileHash>>,
}

pub fn file_hash(dir: &Path, name: &str) -> Result<FileHash> {
    let path = dir.join(name);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(FileHash {
        path: name.to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Writes the four artifacts and the manifest hashing them.
pub fn save_dataset(ds: &Dataset, cfg: &BuildConfig, dir: &Path) -> Result<BuildManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_samples(&dir.join(SAMPLES_FILE), &ds.samples)?;
    ds.features.save(&dir.join(FEATURES_FILE), &dir.join(FEATURES_HEADER))?;
    ds.labels.save(&dir.join(LABELS_FILE), &dir.join(LABEL_SPACE_FILE))?;
    ds.folds.save(&dir.join(FOLDS_FILE))?;
    let group = |names: &[&str]| -> Result<Vec<FileHash>> { names.iter().map(|n| file_hash(dir, n)).collect() };
    let mut artifacts = BTreeMap::new();
    artifacts.insert("samples".to_string(), group(&[SAMPLES_FILE])?);
    artifacts.insert("features".to_string(), group(&[FEATURES_FILE, FEATURES_HEADER])?);
    artifacts.insert("labels".to_string(), group(&[LABELS_FILE, LABEL_SPACE_FILE])?);
    artifacts.insert("folds".to_string(), group(&[FOLDS_FILE])?);
    let manifest = BuildManifest {
        config: cfg.clone(),
        registry_hash: ds.features.layout.registry_hash.clone(),
        label_space_hash: ds.labels.space.hash(),
        samples: ds.samples.len(),
        labels: ds.labels.width(),
        artifacts,
    };
    let path = dir.join(BUILD_MANIFEST);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Reads a built dataset, checking every artifact against the manifest.
pub fn load_dataset(dir: &Path, registry: &VariableRegistry) -> Result<(Dataset, BuildManifest)> {
    let path = dir.join(BUILD_MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: BuildManifest = serde_json::from_str(&text)?;
    for files in manifest.artifacts.values() {
        for f in files {
            if file_hash(dir, &f.path)? != *f {
                return Err(Error::Mismatch(format!("{} does not match the build manifest", f.path)));
            }
        }
    }
    let layout = FeatureLayout::from_registry(registry)?;
    if layout.registry_hash != manifest.registry_hash {
        return Err(Error::Mismatch("dataset was built with a different variable registry".into()));
    }
    let samples = load_samples(&dir.join(SAMPLES_FILE))?;
    let features = FeatureMatrix::load(&dir.join(FEATURES_FILE), &layout)?;
    let labels = LabelMatrix::load(&dir.join(LABELS_FILE), &dir.join(LABEL_SPACE_FILE))?;
    let folds = FoldAssignment::load(&dir.join(FOLDS_FILE), manifest.config.folds)?;
    let ids_match = samples.len() == features.len()
        && samples.len() == labels.len()
        && samples
            .iter()
            .zip(&features.sample_ids)
            .zip(&labels.sample_ids)
            .all(|((s, f), l)| s.sample_id == *f && s.sample_id == *l);
    if !ids_match {
        return Err(Error::Data("samples, features and labels are not row-aligned".into()));
    }
    Ok((
        Dataset {
            samples,
            features,
            labels,
            folds,
        },
        manifest,
    ))
}
