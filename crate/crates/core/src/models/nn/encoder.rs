use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use super::layers::{gelu_with_grad, relu, relu_grad, Embedding, LayerNorm, LayerNormCache, Linear};
use super::params::{Init, ParamLayout};
use super::ssm::{Ssm, SsmCache, SsmInit};
use crate::error::{Error, Result};

/// One residual block: state-space mixing, GELU, pointwise projection,
/// residual add, layer norm.
#[derive(Debug, Clone)]
struct SsmBlock {
    ssm: Ssm,
    out: Linear,
    norm: LayerNorm,
}

struct BlockCache {
    input: Array2<f64>,
    act_grad: Array2<f64>,
    ssm: SsmCache,
    act: Array2<f64>,
    norm: LayerNormCache,
}

/// Waveform encoder: per-step lead projection, stacked state-space blocks,
/// mean pooling over time.
#[derive(Debug, Clone)]
pub struct WaveEncoder {
    pub leads: usize,
    pub d_model: usize,
    input: Linear,
    blocks: Vec<SsmBlock>,
}

pub struct WaveCache {
    x: Array2<f64>,
    blocks: Vec<BlockCache>,
    len: usize,
}

impl WaveEncoder {
    pub fn new(
        layout: &mut ParamLayout,
        leads: usize,
        d_model: usize,
        d_state: usize,
        n_blocks: usize,
    ) -> Self {
        let input = Linear::new(layout, "wave.input", leads, d_model);
        let blocks = (0..n_blocks)
            .map(|i| SsmBlock {
                ssm: Ssm::new(layout, &format!("wave.block{i}.ssm"), d_model, d_state),
                out: Linear::new(layout, &format!("wave.block{i}.out"), d_model, d_model),
                norm: LayerNorm::new(layout, &format!("wave.block{i}.norm"), d_model),
            })
            .collect();
        Self {
            leads,
            d_model,
            input,
            blocks,
        }
    }

    pub fn init<R: Rng + ?Sized>(&self, params: &mut [f64], rng: &mut R) {
        self.input.init(
            params,
            Init::Glorot {
                fan_in: self.leads,
                fan_out: self.d_model,
            },
            rng,
        );
        for block in &self.blocks {
            block.ssm.init(params, SsmInit::default(), rng);
            block.out.init(
                params,
                Init::Glorot {
                    fan_in: self.d_model,
                    fan_out: self.d_model,
                },
                rng,
            );
            block.norm.init(params);
        }
    }

    /// Ranges of the per-block output projections (weights and biases).
    pub fn output_projection_ranges(&self) -> Vec<std::ops::Range<usize>> {
        self.blocks
            .iter()
            .flat_map(|b| [b.out.weight_range(), b.out.bias_range()])
            .collect()
    }

    /// `x` is `[leads, T]`.
    pub fn forward(&self, params: &[f64], x: ArrayView2<f64>) -> Result<(Array1<f64>, WaveCache)> {
        if x.nrows() != self.leads {
            return Err(Error::Shape(format!(
                "waveform has {} leads, encoder expects {}",
                x.nrows(),
                self.leads
            )));
        }
        let len = x.ncols();
        if len == 0 {
            return Err(Error::Shape("waveform has no samples".into()));
        }
        let mut h = self.input.forward(params, x);
        let mut caches = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let (ssm_out, ssm_cache) = block.ssm.forward(params, h.view());
            let mut act = ssm_out;
            let mut act_grad = Array2::zeros(act.raw_dim());
            ndarray::Zip::from(&mut act).and(&mut act_grad).for_each(|a, g| {
                let (v, d) = gelu_with_grad(*a);
                *a = v;
                *g = d;
            });
            let z = block.out.forward(params, act.view());
            let residual = &h + &z;
            let (y, norm_cache) = block.norm.forward(params, residual.view());
            caches.push(BlockCache {
                input: h,
                act_grad,
                ssm: ssm_cache,
                act,
                norm: norm_cache,
            });
            h = y;
        }
        let emb = h.mean_axis(Axis(1)).expect("non-empty sequence");
        Ok((
            emb,
            WaveCache {
                x: x.to_owned(),
                blocks: caches,
                len,
            },
        ))
    }

    /// Returns the gradient w.r.t. the input waveform.
    pub fn backward(
        &self,
        params: &[f64],
        cache: &WaveCache,
        g_emb: ArrayView1<f64>,
        grads: &mut [f64],
    ) -> Array2<f64> {
        let scale = 1.0 / cache.len as f64;
        let mut gh = Array2::from_shape_fn((self.d_model, cache.len), |(c, _)| g_emb[c] * scale);
        for (block, bc) in self.blocks.iter().zip(cache.blocks.iter()).rev() {
            let g_res = block.norm.backward(params, &bc.norm, gh.view(), grads);
            let g_act = block.out.backward(params, bc.act.view(), g_res.view(), grads);
            let g_ssm = g_act * &bc.act_grad;
            let g_in = block
                .ssm
                .backward(params, bc.input.view(), &bc.ssm, g_ssm.view(), grads);
            gh = g_res + g_in;
        }
        self.input.backward(params, cache.x.view(), gh.view(), grads)
    }
}

/// Inputs of the tabular encoder for one sample.
#[derive(Debug, Clone, Copy)]
pub struct TabularInput<'a> {
    /// Imputed numeric values, followed by mask bits when masks are enabled.
    pub numeric: &'a [f64],
    /// Gender, race, acuity indices; 0 means unknown.
    pub categorical: [usize; 3],
}

/// Categorical embeddings concatenated with numeric inputs, then a
/// three-layer rectifier perceptron to `d_model`.
#[derive(Debug, Clone)]
pub struct TabularEncoder {
    pub numeric_dim: usize,
    pub embed_dim: usize,
    pub d_model: usize,
    embeddings: Vec<Embedding>,
    layers: Vec<Linear>,
}

pub struct TabularCache {
    pre: Vec<Array2<f64>>,
    inputs: Vec<Array2<f64>>,
    categorical: [usize; 3],
}

impl TabularEncoder {
    pub fn new(
        layout: &mut ParamLayout,
        numeric_dim: usize,
        cardinalities: [usize; 3],
        embed_dim: usize,
        d_model: usize,
        n_layers: usize,
    ) -> Self {
        let names = ["gender", "race", "acuity"];
        let embeddings = names
            .iter()
            .zip(cardinalities)
            .map(|(n, card)| Embedding::new(layout, &format!("tab.embed.{n}"), card, embed_dim))
            .collect();
        let mut layers = Vec::with_capacity(n_layers);
        let mut width = numeric_dim + 3 * embed_dim;
        for i in 0..n_layers {
            layers.push(Linear::new(layout, &format!("tab.mlp{i}"), width, d_model));
            width = d_model;
        }
        Self {
            numeric_dim,
            embed_dim,
            d_model,
            embeddings,
            layers,
        }
    }

    pub fn init<R: Rng + ?Sized>(&self, params: &mut [f64], rng: &mut R) {
        for e in &self.embeddings {
            e.init(params, rng);
        }
        for l in &self.layers {
            l.init(params, Init::He { fan_in: l.in_dim }, rng);
        }
    }

    pub fn forward(&self, params: &[f64], input: TabularInput) -> Result<(Array1<f64>, TabularCache)> {
        if input.numeric.len() != self.numeric_dim {
            return Err(Error::Shape(format!(
                "tabular input has {} numeric values, encoder expects {}",
                input.numeric.len(),
                self.numeric_dim
            )));
        }
        let mut x = Vec::with_capacity(self.numeric_dim + 3 * self.embed_dim);
        for (emb, &idx) in self.embeddings.iter().zip(input.categorical.iter()) {
            if idx >= emb.vocab {
                return Err(Error::Invalid(format!(
                    "categorical index {idx} out of range (cardinality {})",
                    emb.vocab
                )));
            }
            x.extend_from_slice(emb.lookup(params, idx));
        }
        x.extend_from_slice(input.numeric);
        let mut h = Array2::from_shape_vec((x.len(), 1), x).expect("column vector");
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut inputs = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(params, h.view());
            inputs.push(h);
            h = if i < last { z.mapv(relu) } else { z.clone() };
            pre.push(z);
        }
        let emb = h.column(0).to_owned();
        Ok((
            emb,
            TabularCache {
                pre,
                inputs,
                categorical: input.categorical,
            },
        ))
    }

    /// Returns the gradient w.r.t. the numeric inputs.
    pub fn backward(
        &self,
        params: &[f64],
        cache: &TabularCache,
        g_emb: ArrayView1<f64>,
        grads: &mut [f64],
    ) -> Array1<f64> {
        let last = self.layers.len() - 1;
        let mut g = g_emb.to_owned().insert_axis(Axis(1));
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if i < last {
                g = &g * &cache.pre[i].mapv(relu_grad);
            }
            g = layer.backward(params, cache.inputs[i].view(), g.view(), grads);
        }
        let g = g.column(0).to_owned();
        let slice = g.as_slice().expect("contiguous");
        for (k, (emb, &idx)) in self
            .embeddings
            .iter()
            .zip(cache.categorical.iter())
            .enumerate()
        {
            let start = k * self.embed_dim;
            emb.accumulate(grads, idx, &slice[start..start + self.embed_dim]);
        }
        Array1::from(slice[3 * self.embed_dim..].to_vec())
    }
}
