use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encoder::{TabularCache, TabularEncoder, TabularInput, WaveCache, WaveEncoder};
use super::layers::Linear;
use super::params::{Init, ParamLayout};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Waveform,
    Tabular,
    Fusion,
}

impl Modality {
    pub fn uses_waveform(self) -> bool {
        matches!(self, Modality::Waveform | Modality::Fusion)
    }

    pub fn uses_tabular(self) -> bool {
        matches!(self, Modality::Tabular | Modality::Fusion)
    }
}

/// Everything needed to rebuild the parameter layout of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkShape {
    pub modality: Modality,
    pub leads: usize,
    pub d_model: usize,
    pub d_state: usize,
    pub n_blocks: usize,
    pub numeric_dim: usize,
    pub cardinalities: [usize; 3],
    pub embed_dim: usize,
    pub mlp_layers: usize,
    pub n_labels: usize,
}

#[derive(Debug, Clone)]
pub struct DeepNet {
    pub shape: NetworkShape,
    layout: ParamLayout,
    wave: Option<WaveEncoder>,
    tab: Option<TabularEncoder>,
    head: Linear,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NetInput<'a> {
    pub waveform: Option<ArrayView2<'a, f64>>,
    pub tabular: Option<TabularInput<'a>>,
}

pub struct NetCache {
    wave: Option<WaveCache>,
    tab: Option<TabularCache>,
    features: Array2<f64>,
}

#[derive(Debug, Default)]
pub struct InputGrads {
    pub waveform: Option<Array2<f64>>,
    pub numeric: Option<Array1<f64>>,
}

impl DeepNet {
    pub fn new(shape: NetworkShape) -> Self {
        let mut layout = ParamLayout::new();
        let wave = shape.modality.uses_waveform().then(|| {
            WaveEncoder::new(
                &mut layout,
                shape.leads,
                shape.d_model,
                shape.d_state,
                shape.n_blocks,
            )
        });
        let tab = shape.modality.uses_tabular().then(|| {
            TabularEncoder::new(
                &mut layout,
                shape.numeric_dim,
                shape.cardinalities,
                shape.embed_dim,
                shape.d_model,
                shape.mlp_layers,
            )
        });
        let width = wave.as_ref().map_or(0, |w| w.d_model) + tab.as_ref().map_or(0, |t| t.d_model);
        let head = Linear::new(&mut layout, "head", width, shape.n_labels);
        Self {
            shape,
            layout,
            wave,
            tab,
            head,
        }
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn num_params(&self) -> usize {
        self.layout.len()
    }

    pub fn wave_encoder(&self) -> Option<&WaveEncoder> {
        self.wave.as_ref()
    }

    pub fn tabular_encoder(&self) -> Option<&TabularEncoder> {
        self.tab.as_ref()
    }

    pub fn head(&self) -> &Linear {
        &self.head
    }

    pub fn init(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = self.layout.zeros();
        if let Some(w) = &self.wave {
            w.init(&mut params, &mut rng);
        }
        if let Some(t) = &self.tab {
            t.init(&mut params, &mut rng);
        }
        self.head.init(
            &mut params,
            Init::Glorot {
                fan_in: self.head.in_dim,
                fan_out: self.head.out_dim,
            },
            &mut rng,
        );
        params
    }

    /// Concatenate the available embeddings (waveform first) and apply the
    /// linear head.
    pub fn classify(
        &self,
        params: &[f64],
        wave_emb: Option<ArrayView1<f64>>,
        tab_emb: Option<ArrayView1<f64>>,
    ) -> Result<Vec<f64>> {
        let features = self.concat(wave_emb, tab_emb)?;
        Ok(self.head.forward(params, features.view()).into_raw_vec_and_offset().0)
    }

    fn concat(
        &self,
        wave_emb: Option<ArrayView1<f64>>,
        tab_emb: Option<ArrayView1<f64>>,
    ) -> Result<Array2<f64>> {
        let mut v = Vec::with_capacity(self.head.in_dim);
        if let Some(w) = wave_emb {
            v.extend(w.iter().copied());
        }
        if let Some(t) = tab_emb {
            v.extend(t.iter().copied());
        }
        if v.len() != self.head.in_dim {
            return Err(Error::Shape(format!(
                "fused embedding has width {}, head expects {}",
                v.len(),
                self.head.in_dim
            )));
        }
        Ok(Array2::from_shape_vec((v.len(), 1), v).expect("column vector"))
    }

    pub fn forward(&self, params: &[f64], input: NetInput) -> Result<(Vec<f64>, NetCache)> {
        let (wave_emb, wave_cache) = match (&self.wave, input.waveform) {
            (Some(enc), Some(x)) => {
                let (e, c) = enc.forward(params, x)?;
                (Some(e), Some(c))
            }
            (Some(_), None) => return Err(Error::Shape("model requires a waveform input".into())),
            (None, _) => (None, None),
        };
        let (tab_emb, tab_cache) = match (&self.tab, input.tabular) {
            (Some(enc), Some(x)) => {
                let (e, c) = enc.forward(params, x)?;
                (Some(e), Some(c))
            }
            (Some(_), None) => return Err(Error::Shape("model requires a tabular input".into())),
            (None, _) => (None, None),
        };
        let features = self.concat(
            wave_emb.as_ref().map(|e| e.view()),
            tab_emb.as_ref().map(|e| e.view()),
        )?;
        let logits = self.head.forward(params, features.view());
        Ok((
            logits.into_raw_vec_and_offset().0,
            NetCache {
                wave: wave_cache,
                tab: tab_cache,
                features,
            },
        ))
    }

    pub fn backward(
        &self,
        params: &[f64],
        cache: &NetCache,
        g_logits: &[f64],
        grads: &mut [f64],
    ) -> InputGrads {
        let gy = ArrayView2::from_shape((g_logits.len(), 1), g_logits).expect("column vector");
        let g_feat = self.head.backward(params, cache.features.view(), gy, grads);
        let g_feat = g_feat.column(0);
        let mut out = InputGrads::default();
        let mut offset = 0;
        if let (Some(enc), Some(c)) = (&self.wave, &cache.wave) {
            let g = g_feat.slice(ndarray::s![offset..offset + enc.d_model]);
            out.waveform = Some(enc.backward(params, c, g, grads));
            offset += enc.d_model;
        }
        if let (Some(enc), Some(c)) = (&self.tab, &cache.tab) {
            let g = g_feat.slice(ndarray::s![offset..offset + enc.d_model]);
            out.numeric = Some(enc.backward(params, c, g, grads));
        }
        out
    }
}
