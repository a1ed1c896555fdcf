//! Minibatch optimisation of the deep models with validation-based
//! checkpoint selection.

use log::info;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::nn::layers::sigmoid;
use super::nn::{masked_bce_with_count, AdamW, DeepNet, NetInput, TabularInput};
use crate::error::{Error, Result};
use crate::eval::macro_auroc;
use crate::labels::Ternary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeepModelConfig {
    pub n_blocks: usize,
    pub d_model: usize,
    pub d_state: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub schedule: Schedule,
    pub batch_size: usize,
    pub epochs: usize,
    pub sampling_rate_target: f64,
    pub pooling: Pooling,
    pub mlp_layers: usize,
    pub embed_dim: usize,
    pub seed: u64,
}

impl Default for DeepModelConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl DeepModelConfig {
    pub fn paper() -> Self {
        Self {
            n_blocks: 4,
            d_model: 512,
            d_state: 8,
            lr: 1e-3,
            weight_decay: 1e-3,
            schedule: Schedule::Constant,
            batch_size: 64,
            epochs: 20,
            sampling_rate_target: 100.0,
            pooling: Pooling::Mean,
            mlp_layers: 3,
            embed_dim: 8,
            seed: 0,
        }
    }

    pub fn desk() -> Self {
        Self {
            n_blocks: 2,
            d_model: 64,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_blocks", self.n_blocks),
            ("d_model", self.d_model),
            ("d_state", self.d_state),
            ("batch_size", self.batch_size),
            ("mlp_layers", self.mlp_layers),
            ("embed_dim", self.embed_dim),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        for (name, v) in [("lr", self.lr), ("sampling_rate_target", self.sampling_rate_target)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        Ok(())
    }
}

/// Model inputs for a set of rows, already resampled and normalised.
#[derive(Debug, Clone, Default)]
pub struct DeepData {
    /// One `[leads, T]` array per row.
    pub waveforms: Option<Vec<Array2<f64>>>,
    /// `[rows, numeric_dim]`: standardised values, then mask bits if enabled.
    pub numeric: Option<Array2<f64>>,
    pub categorical: Vec<[usize; 3]>,
}

impl DeepData {
    pub fn len(&self) -> usize {
        self.categorical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categorical.is_empty()
    }

    pub fn input(&self, i: usize) -> NetInput<'_> {
        NetInput {
            waveform: self.waveforms.as_ref().map(|w| w[i].view()),
            tabular: self.numeric.as_ref().map(|x| TabularInput {
                numeric: x.row(i).to_slice().expect("row-major numeric inputs"),
                categorical: self.categorical[i],
            }),
        }
    }

    pub fn select(&self, rows: &[usize]) -> DeepData {
        DeepData {
            waveforms: self.waveforms.as_ref().map(|w| rows.iter().map(|&r| w[r].clone()).collect()),
            numeric: self.numeric.as_ref().map(|x| x.select(ndarray::Axis(0), rows)),
            categorical: rows.iter().map(|&r| self.categorical[r]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean batch loss; `None` for the untrained epoch 0.
    pub train_loss: Option<f64>,
    pub val_macro_auroc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: Vec<f64>,
    pub best_epoch: usize,
    pub history: Vec<EpochLog>,
}

/// Probabilities `[row][label]`.
pub fn predict(net: &DeepNet, params: &[f64], data: &DeepData) -> Result<Vec<Vec<f64>>> {
    (0..data.len())
        .map(|i| {
            let (logits, _) = net.forward(params, data.input(i))?;
            Ok(logits.into_iter().map(sigmoid).collect())
        })
        .collect()
}

fn transpose<T: Copy>(rows: &[Vec<T>], width: usize) -> Vec<Vec<T>> {
    (0..width).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

fn validate_macro(net: &DeepNet, params: &[f64], data: &DeepData, labels: &[Vec<Ternary>]) -> Result<f64> {
    let width = net.shape.n_labels;
    let scores = predict(net, params, data)?;
    macro_auroc(&transpose(&scores, width), &transpose(labels, width))
}

fn check_rows(data: &DeepData, labels: &[Vec<Ternary>], width: usize, what: &str) -> Result<()> {
    if data.len() != labels.len() {
        return Err(Error::Shape(format!("{what}: {} input rows, {} label rows", data.len(), labels.len())));
    }
    if let Some(r) = labels.iter().find(|r| r.len() != width) {
        return Err(Error::Shape(format!("{what}: label row of width {}, model has {width}", r.len())));
    }
    Ok(())
}

/// Trains from `init` and returns the parameters of the epoch with the
/// highest validation macro AUROC. Epoch 0 is the initialisation itself;
/// later epochs must beat the incumbent strictly to replace it.
pub fn train_deep(
    net: &DeepNet,
    init: Vec<f64>,
    cfg: &DeepModelConfig,
    train: (&DeepData, &[Vec<Ternary>]),
    val: (&DeepData, &[Vec<Ternary>]),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let width = net.shape.n_labels;
    check_rows(train.0, train.1, width, "train")?;
    check_rows(val.0, val.1, width, "validation")?;
    if init.len() != net.num_params() {
        return Err(Error::Shape(format!("{} parameters, model has {}", init.len(), net.num_params())));
    }
    let mut params = init;
    let baseline = validate_macro(net, &params, val.0, val.1)?;
    info!("epoch 0: val macro AUROC {baseline:.4}");
    let mut history = vec![EpochLog {
        epoch: 0,
        train_loss: None,
        val_macro_auroc: baseline,
    }];
    let mut best = (0usize, baseline, params.clone());
    let mut opt = AdamW::new(params.len(), cfg.lr, cfg.weight_decay);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.0.len()).collect();
    let mut grads = vec![0.0; params.len()];
    let mut step = 0usize;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut n_batches = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            step += 1;
            let active: usize = batch
                .iter()
                .map(|&i| train.1[i].iter().filter(|l| !l.is_masked()).count())
                .sum();
            if active == 0 {
                continue;
            }
            grads.fill(0.0);
            let mut loss = 0.0;
            for &i in batch {
                let diverged = |message: String| Error::Divergence { epoch, step, message };
                let (logits, cache) = net.forward(&params, train.0.input(i))?;
                let (l, g) = masked_bce_with_count(&logits, &train.1[i], active)
                    .map_err(|e| diverged(format!("sample {i}: {e}")))?;
                loss += l;
                net.backward(&params, &cache, &g, &mut grads);
            }
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    step,
                    message: format!("non-finite loss {loss} or gradient"),
                });
            }
            opt.step(&mut params, &grads);
            loss_sum += loss;
            n_batches += 1;
        }
        let val_auc = validate_macro(net, &params, val.0, val.1)?;
        let train_loss = (n_batches > 0).then(|| loss_sum / n_batches as f64);
        info!(
            "epoch {epoch}: train loss {:.4}, val macro AUROC {val_auc:.4}",
            train_loss.unwrap_or(f64::NAN)
        );
        history.push(EpochLog {
            epoch,
            train_loss,
            val_macro_auroc: val_auc,
        });
        if val_auc > best.1 {
            best = (epoch, val_auc, params.clone());
        }
    }
    Ok(TrainOutcome {
        params: best.2,
        best_epoch: best.0,
        history,
    })
}

