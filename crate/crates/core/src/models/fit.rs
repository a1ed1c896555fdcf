//! Fitting a model for one scenario on a built dataset, scoring rows with
//! it, and the checkpoint container tying the two together.

use std::path::Path;

use log::{info, warn};
use ndarray::{concatenate, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::gbdt::{fit_booster, BinnedMatrix, Booster};
use super::nn::{DeepNet, Modality, NetworkShape};
use super::preprocess::{decimate, LeadStats, Standardizer};
use super::scenario::{ModelConfig, ModelSpec};
use super::train::{predict, train_deep, DeepData, EpochLog};
use crate::cohort::demographics::CARDINALITIES;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::mask_name;
use crate::impute::{fit_imputer, Imputer};
use crate::ingest::{WaveformStore, LEADS};
use crate::labels::Ternary;
use crate::splits::Role;

/// How the sequence layer is parameterised, recorded with every deep
/// checkpoint.
pub const SSM_VARIANT: &str =
    "diagonal complex state space, zero-order hold, causal scan, S4D-Lin init, GELU, post-norm residual";

/// Probabilities `[row][label]`, columns in label-space order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub sample_ids: Vec<String>,
    pub label_names: Vec<String>,
    pub scores: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    /// `[label][row]`.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.label_names.len())
            .map(|j| self.scores.iter().map(|r| r[j]).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FittedModel {
    Tree {
        columns: Vec<String>,
        imputer: Option<Imputer>,
        /// `None` for skipped labels, which score a constant 0.5.
        boosters: Vec<Option<Booster>>,
        skipped: Vec<String>,
    },
    Deep {
        shape: NetworkShape,
        ssm_variant: String,
        imputer: Option<Imputer>,
        standardizer: Option<Standardizer>,
        lead_stats: Option<LeadStats>,
        best_epoch: usize,
        history: Vec<EpochLog>,
        params: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub spec: ModelSpec,
    pub config: ModelConfig,
    pub label_space_hash: String,
    pub registry_hash: String,
    pub label_names: Vec<String>,
    pub model: FittedModel,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Refuses datasets built with another label space or registry.
    pub fn check_compatible(&self, ds: &Dataset) -> Result<()> {
        let space = ds.labels.space.hash();
        if space != self.label_space_hash {
            return Err(Error::Mismatch(format!(
                "label space hash {space} differs from the checkpoint's {}",
                self.label_space_hash
            )));
        }
        let reg = &ds.features.layout.registry_hash;
        if *reg != self.registry_hash {
            return Err(Error::Mismatch(format!(
                "feature registry hash {reg} differs from the checkpoint's {}",
                self.registry_hash
            )));
        }
        Ok(())
    }

    pub fn skipped_labels(&self) -> &[String] {
        match &self.model {
            FittedModel::Tree { skipped, .. } => skipped,
            FittedModel::Deep { .. } => &[],
        }
    }
}

/// Row indices of one role, optionally only first records of a visit.
pub fn role_rows(ds: &Dataset, role: Role, first_of_visit_only: bool) -> Vec<usize> {
    ds.roles()
        .select(&ds.samples, role)
        .into_iter()
        .filter(|&i| !first_of_visit_only || ds.samples[i].is_first_of_visit)
        .collect()
}

fn label_rows(ds: &Dataset, rows: &[usize]) -> Vec<Vec<Ternary>> {
    rows.iter().map(|&i| ds.labels.row(i).to_vec()).collect()
}

fn tree_columns(ds: &Dataset, routine: bool, ecg: bool) -> Vec<String> {
    let l = &ds.features.layout;
    let mut cols = Vec::new();
    if routine {
        cols.extend(l.categorical.iter().cloned());
        cols.extend(l.numeric.iter().cloned());
    }
    if ecg {
        cols.extend(l.ecg.iter().cloned());
    }
    cols
}

/// Raw tree inputs; categorical indices enter as ordinal values.
fn tree_matrix(ds: &Dataset, rows: &[usize], routine: bool, ecg: bool) -> Array2<f64> {
    let f = &ds.features;
    let mut parts = Vec::new();
    if routine {
        let cat = Array2::from_shape_fn((rows.len(), 3), |(i, j)| f.categorical[rows[i]][j] as f64);
        parts.push(cat);
        parts.push(f.numeric.select(Axis(0), rows));
    }
    if ecg {
        parts.push(f.ecg.select(Axis(0), rows));
    }
    let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
    row_major(concatenate(Axis(1), &views).expect("row counts agree"))
}

/// Row-major copy when `concatenate` produced another layout.
fn row_major(a: Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    }
}

fn imputed_with_mask(imputer: &Imputer, x: &Array2<f64>, mask: bool) -> Result<Array2<f64>> {
    let (filled, m) = imputer.apply(&imputer.columns, x.view(), mask)?;
    Ok(match m {
        Some(m) => row_major(concatenate(Axis(1), &[filled.view(), m.view()]).expect("row counts agree")),
        None => filled,
    })
}

fn fit_tree(ds: &Dataset, routine: bool, ecg: bool, cfg: &ModelConfig, train: &[usize]) -> Result<FittedModel> {
    cfg.tree.validate()?;
    let mut columns = tree_columns(ds, routine, ecg);
    let mut x = tree_matrix(ds, train, routine, ecg);
    let imputer = if cfg.impute_trees {
        let imp = fit_imputer(&columns, x.view())?;
        x = imputed_with_mask(&imp, &x, cfg.mask_columns)?;
        if cfg.mask_columns {
            let masks: Vec<String> = columns.iter().map(|c| mask_name(c)).collect();
            columns.extend(masks);
        }
        Some(imp)
    } else {
        None
    };
    let data = BinnedMatrix::new(x.view(), cfg.tree.max_bins);
    let space = &ds.labels.space;
    let mut boosters = Vec::with_capacity(space.len());
    let mut skipped = Vec::new();
    for (j, name) in space.names.iter().enumerate() {
        let wanted = cfg.tree_labels.as_ref().is_none_or(|l| l.contains(name));
        let (mut rows, mut y) = (Vec::new(), Vec::new());
        for (k, &r) in train.iter().enumerate() {
            if let Some(v) = ds.labels.get(r, j).value() {
                rows.push(k);
                y.push(f64::from(u8::from(v)));
            }
        }
        let n_pos = y.iter().filter(|&&v| v == 1.0).count();
        if !wanted || n_pos == 0 || n_pos == y.len() {
            if wanted {
                warn!("label {name}: fewer than two classes among training rows; skipped");
            }
            skipped.push(name.clone());
            boosters.push(None);
            continue;
        }
        boosters.push(Some(fit_booster(&data, &rows, &y, &cfg.tree)?));
    }
    if boosters.iter().all(Option::is_none) {
        return Err(Error::Data("every label was skipped; no tree model could be fitted".into()));
    }
    info!("fitted {} tree models, skipped {}", boosters.len() - skipped.len(), skipped.len());
    Ok(FittedModel::Tree {
        columns,
        imputer,
        boosters,
        skipped,
    })
}

fn load_waveforms(ds: &Dataset, store: &WaveformStore, rows: &[usize], target: f64) -> Result<Vec<Array2<f64>>> {
    rows.iter()
        .map(|&i| {
            let rec = store.load(&ds.samples[i].record_id)?;
            decimate(rec.samples.view(), rec.sampling_rate, target)
        })
        .collect()
}

/// Resampled, normalised waveforms and imputed, standardised numeric
/// inputs for the requested rows.
#[allow(clippy::too_many_arguments)]
fn deep_data(
    ds: &Dataset,
    store: Option<&WaveformStore>,
    rows: &[usize],
    modality: Modality,
    target_rate: f64,
    imputer: Option<&Imputer>,
    standardizer: Option<&Standardizer>,
    lead_stats: Option<&LeadStats>,
    mask: bool,
) -> Result<DeepData> {
    let waveforms = if modality.uses_waveform() {
        let store = store.ok_or_else(|| Error::Config("waveform model needs a waveform store".into()))?;
        let mut w = load_waveforms(ds, store, rows, target_rate)?;
        if let Some(s) = lead_stats {
            for x in &mut w {
                s.apply(x)?;
            }
        }
        Some(w)
    } else {
        None
    };
    let numeric = match (modality.uses_tabular(), imputer) {
        (true, Some(imp)) => {
            let raw = ds.features.numeric.select(Axis(0), rows);
            let (mut filled, m) = imp.apply(&ds.features.layout.numeric, raw.view(), mask)?;
            if let Some(s) = standardizer {
                s.apply(&mut filled)?;
            }
            Some(row_major(match m {
                Some(m) => concatenate(Axis(1), &[filled.view(), m.view()]).expect("row counts agree"),
                None => filled,
            }))
        }
        _ => None,
    };
    Ok(DeepData {
        waveforms,
        numeric,
        categorical: rows.iter().map(|&i| ds.features.categorical[i]).collect(),
    })
}

fn fit_deep(
    ds: &Dataset,
    store: Option<&WaveformStore>,
    modality: Modality,
    cfg: &ModelConfig,
    train: &[usize],
    val: &[usize],
) -> Result<FittedModel> {
    let dc = &cfg.deep;
    dc.validate()?;
    let (imputer, standardizer) = if modality.uses_tabular() {
        let cols = &ds.features.layout.numeric;
        let raw = ds.features.numeric.select(Axis(0), train);
        let imp = fit_imputer(cols, raw.view())?;
        let (filled, _) = imp.apply(cols, raw.view(), false)?;
        let std = Standardizer::fit(filled.view())?;
        (Some(imp), Some(std))
    } else {
        (None, None)
    };
    let mut train_data = deep_data(
        ds,
        store,
        train,
        modality,
        dc.sampling_rate_target,
        imputer.as_ref(),
        standardizer.as_ref(),
        None,
        cfg.mask_columns,
    )?;
    let lead_stats = match &mut train_data.waveforms {
        Some(w) => {
            let stats = LeadStats::fit(w.iter().map(|x| x.view()))?;
            for x in w.iter_mut() {
                stats.apply(x)?;
            }
            Some(stats)
        }
        None => None,
    };
    let val_data = deep_data(
        ds,
        store,
        val,
        modality,
        dc.sampling_rate_target,
        imputer.as_ref(),
        standardizer.as_ref(),
        lead_stats.as_ref(),
        cfg.mask_columns,
    )?;
    let p = ds.features.layout.numeric.len();
    let shape = NetworkShape {
        modality,
        leads: LEADS,
        d_model: dc.d_model,
        d_state: dc.d_state,
        n_blocks: dc.n_blocks,
        numeric_dim: if cfg.mask_columns { 2 * p } else { p },
        cardinalities: CARDINALITIES,
        embed_dim: dc.embed_dim,
        mlp_layers: dc.mlp_layers,
        n_labels: ds.labels.width(),
    };
    let net = DeepNet::new(shape.clone());
    info!(
        "training {modality:?} network with {} parameters on {} rows ({} validation)",
        net.num_params(),
        train.len(),
        val.len()
    );
    let init = net.init(dc.seed);
    let train_labels = label_rows(ds, train);
    let val_labels = label_rows(ds, val);
    let out = train_deep(&net, init, dc, (&train_data, &train_labels), (&val_data, &val_labels))?;
    info!("selected epoch {}", out.best_epoch);
    Ok(FittedModel::Deep {
        shape,
        ssm_variant: SSM_VARIANT.into(),
        imputer,
        standardizer,
        lead_stats,
        best_epoch: out.best_epoch,
        history: out.history,
        params: out.params,
    })
}

/// Fits on the training fold; deep models select their epoch on the
/// first record of each visit in the validation fold.
pub fn fit_model(spec: ModelSpec, ds: &Dataset, store: Option<&WaveformStore>, cfg: &ModelConfig) -> Result<Checkpoint> {
    let train = role_rows(ds, Role::Train, false);
    if train.is_empty() {
        return Err(Error::Data("training fold is empty".into()));
    }
    let model = match spec {
        ModelSpec::Tree { routine, ecg } => {
            if !routine && !ecg {
                return Err(Error::Config("tree model needs routine or ECG features".into()));
            }
            fit_tree(ds, routine, ecg, cfg, &train)?
        }
        ModelSpec::Deep { modality } => {
            let val = role_rows(ds, Role::Val, true);
            fit_deep(ds, store, modality, cfg, &train, &val)?
        }
    };
    Ok(Checkpoint {
        spec,
        config: cfg.clone(),
        label_space_hash: ds.labels.space.hash(),
        registry_hash: ds.features.layout.registry_hash.clone(),
        label_names: ds.labels.space.names.clone(),
        model,
    })
}

/// Scores the given dataset rows.
pub fn score_model(ckpt: &Checkpoint, ds: &Dataset, store: Option<&WaveformStore>, rows: &[usize]) -> Result<ScoreMatrix> {
    ckpt.check_compatible(ds)?;
    let scores = match (&ckpt.model, ckpt.spec) {
        (
            FittedModel::Tree {
                imputer, boosters, ..
            },
            ModelSpec::Tree { routine, ecg },
        ) => {
            let mut x = tree_matrix(ds, rows, routine, ecg);
            if let Some(imp) = imputer {
                x = imputed_with_mask(imp, &x, ckpt.config.mask_columns)?;
            }
            (0..rows.len())
                .map(|i| {
                    let row = x.row(i);
                    let row = row.as_slice().expect("row-major matrix");
                    boosters
                        .iter()
                        .map(|b| b.as_ref().map_or(0.5, |b| b.predict_proba(row)))
                        .collect()
                })
                .collect()
        }
        (
            FittedModel::Deep {
                shape,
                imputer,
                standardizer,
                lead_stats,
                params,
                ..
            },
            ModelSpec::Deep { modality },
        ) => {
            let data = deep_data(
                ds,
                store,
                rows,
                modality,
                ckpt.config.deep.sampling_rate_target,
                imputer.as_ref(),
                standardizer.as_ref(),
                lead_stats.as_ref(),
                ckpt.config.mask_columns,
            )?;
            let net = DeepNet::new(shape.clone());
            if net.num_params() != params.len() {
                return Err(Error::Mismatch(format!(
                    "checkpoint holds {} parameters, its shape needs {}",
                    params.len(),
                    net.num_params()
                )));
            }
            predict(&net, params, &data)?
        }
        _ => return Err(Error::Mismatch("checkpoint model family does not match its spec".into())),
    };
    Ok(ScoreMatrix {
        sample_ids: rows.iter().map(|&i| ds.samples[i].sample_id.clone()).collect(),
        label_names: ckpt.label_names.clone(),
        scores,
    })
}
