//! Dense building blocks with hand-written backward passes.
//!
//! Activations are channel-major: a sequence of `T` steps with `C` channels is
//! an `Array2` of shape `[C, T]`; a single vector is `[C, 1]`.

use std::ops::Range;

use ndarray::{linalg::general_mat_mul, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use super::params::{fill, Init, ParamLayout};

#[derive(Debug, Clone)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    w: Range<usize>,
    b: Range<usize>,
}

impl Linear {
    pub fn new(layout: &mut ParamLayout, name: &str, in_dim: usize, out_dim: usize) -> Self {
        let w = layout.add(format!("{name}.weight"), &[out_dim, in_dim]);
        let b = layout.add(format!("{name}.bias"), &[out_dim]);
        Self {
            in_dim,
            out_dim,
            w,
            b,
        }
    }

    pub fn init<R: Rng + ?Sized>(&self, params: &mut [f64], weight: Init, rng: &mut R) {
        fill(&mut params[self.w.clone()], weight, rng);
        fill(&mut params[self.b.clone()], Init::Zeros, rng);
    }

    pub fn weight<'a>(&self, params: &'a [f64]) -> ArrayView2<'a, f64> {
        ArrayView2::from_shape((self.out_dim, self.in_dim), &params[self.w.clone()])
            .expect("weight slice matches shape")
    }

    pub fn bias<'a>(&self, params: &'a [f64]) -> ArrayView1<'a, f64> {
        ArrayView1::from(&params[self.b.clone()])
    }

    pub fn weight_range(&self) -> Range<usize> {
        self.w.clone()
    }

    pub fn bias_range(&self) -> Range<usize> {
        self.b.clone()
    }

    /// `y = W x + b` applied to every column of `x`.
    pub fn forward(&self, params: &[f64], x: ArrayView2<f64>) -> Array2<f64> {
        debug_assert_eq!(x.nrows(), self.in_dim);
        let mut y = Array2::zeros((self.out_dim, x.ncols()));
        let bias = self.bias(params);
        for mut col in y.columns_mut() {
            col.assign(&bias);
        }
        general_mat_mul(1.0, &self.weight(params), &x, 1.0, &mut y);
        y
    }

    /// Accumulates parameter gradients and returns the gradient w.r.t. `x`.
    pub fn backward(
        &self,
        params: &[f64],
        x: ArrayView2<f64>,
        gy: ArrayView2<f64>,
        grads: &mut [f64],
    ) -> Array2<f64> {
        {
            let mut gw = ndarray::ArrayViewMut2::from_shape(
                (self.out_dim, self.in_dim),
                &mut grads[self.w.clone()],
            )
            .expect("weight slice matches shape");
            general_mat_mul(1.0, &gy, &x.t(), 1.0, &mut gw);
        }
        let gb = gy.sum_axis(Axis(1));
        for (g, v) in grads[self.b.clone()].iter_mut().zip(gb.iter()) {
            *g += v;
        }
        let mut gx = Array2::zeros((self.in_dim, gy.ncols()));
        general_mat_mul(1.0, &self.weight(params).t(), &gy, 0.0, &mut gx);
        gx
    }
}

/// Normalisation across channels at every time step.
#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub dim: usize,
    gamma: Range<usize>,
    beta: Range<usize>,
    eps: f64,
}

pub struct LayerNormCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
}

impl LayerNorm {
    pub fn new(layout: &mut ParamLayout, name: &str, dim: usize) -> Self {
        let gamma = layout.add(format!("{name}.gamma"), &[dim]);
        let beta = layout.add(format!("{name}.beta"), &[dim]);
        Self {
            dim,
            gamma,
            beta,
            eps: 1e-5,
        }
    }

    pub fn init(&self, params: &mut [f64]) {
        params[self.gamma.clone()].fill(1.0);
        params[self.beta.clone()].fill(0.0);
    }

    pub fn forward(&self, params: &[f64], x: ArrayView2<f64>) -> (Array2<f64>, LayerNormCache) {
        let n = self.dim as f64;
        let mean = x.sum_axis(Axis(0)) / n;
        let centered = &x - &mean.view().insert_axis(Axis(0));
        let var = centered.mapv(|v| v * v).sum_axis(Axis(0)) / n;
        let inv_std = var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        let xhat = &centered * &inv_std.view().insert_axis(Axis(0));
        let gamma = &params[self.gamma.clone()];
        let beta = &params[self.beta.clone()];
        let mut y = xhat.clone();
        for (c, mut row) in y.rows_mut().into_iter().enumerate() {
            let (g, b) = (gamma[c], beta[c]);
            row.mapv_inplace(|v| g * v + b);
        }
        (y, LayerNormCache { xhat, inv_std })
    }

    pub fn backward(
        &self,
        params: &[f64],
        cache: &LayerNormCache,
        gy: ArrayView2<f64>,
        grads: &mut [f64],
    ) -> Array2<f64> {
        let n = self.dim as f64;
        let gamma = &params[self.gamma.clone()];
        let mut gxhat = gy.to_owned();
        for (c, mut row) in gxhat.rows_mut().into_iter().enumerate() {
            let g = gamma[c];
            row.mapv_inplace(|v| v * g);
        }
        let ggamma = (&gy * &cache.xhat).sum_axis(Axis(1));
        let gbeta = gy.sum_axis(Axis(1));
        for (g, v) in grads[self.gamma.clone()].iter_mut().zip(ggamma.iter()) {
            *g += v;
        }
        for (g, v) in grads[self.beta.clone()].iter_mut().zip(gbeta.iter()) {
            *g += v;
        }
        let mean_g = gxhat.sum_axis(Axis(0)) / n;
        let mean_gx = (&gxhat * &cache.xhat).sum_axis(Axis(0)) / n;
        let mut gx = gxhat;
        gx -= &mean_g.view().insert_axis(Axis(0));
        gx -= &(&cache.xhat * &mean_gx.view().insert_axis(Axis(0)));
        gx *= &cache.inv_std.view().insert_axis(Axis(0));
        gx
    }
}

/// Lookup table for one categorical field. Index 0 is reserved for "unknown".
#[derive(Debug, Clone)]
pub struct Embedding {
    pub vocab: usize,
    pub dim: usize,
    table: Range<usize>,
}

impl Embedding {
    pub fn new(layout: &mut ParamLayout, name: &str, vocab: usize, dim: usize) -> Self {
        let table = layout.add(format!("{name}.table"), &[vocab, dim]);
        Self { vocab, dim, table }
    }

    pub fn init<R: Rng + ?Sized>(&self, params: &mut [f64], rng: &mut R) {
        fill(&mut params[self.table.clone()], Init::Normal(1.0), rng);
    }

    pub fn lookup<'a>(&self, params: &'a [f64], index: usize) -> &'a [f64] {
        let start = self.table.start + index * self.dim;
        &params[start..start + self.dim]
    }

    pub fn accumulate(&self, grads: &mut [f64], index: usize, g: &[f64]) {
        let start = self.table.start + index * self.dim;
        for (dst, v) in grads[start..start + self.dim].iter_mut().zip(g) {
            *dst += v;
        }
    }
}

const GELU_K: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_C: f64 = 0.044_715;

pub fn gelu(x: f64) -> f64 {
    let u = GELU_K * (x + GELU_C * x * x * x);
    0.5 * x * (1.0 + u.tanh())
}

/// GELU and its derivative from a single `tanh` evaluation.
pub fn gelu_with_grad(x: f64) -> (f64, f64) {
    let u = GELU_K * (x + GELU_C * x * x * x);
    let t = u.tanh();
    (
        0.5 * x * (1.0 + t),
        0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_K * (1.0 + 3.0 * GELU_C * x * x),
    )
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

pub fn relu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
