//! Diagonal structured state-space layer.
//!
//! Each of the `channels` input channels drives its own bank of `modes`
//! complex-diagonal states. The continuous system `x' = A x + u`,
//! `y = 2 Re(C x) + D u` is discretised with zero-order hold using a learned
//! per-channel step size, giving the recurrence
//!
//! ```text
//! x[t] = a * x[t-1] + b * u[t],   a = exp(dt A),   b = (a - 1) / A
//! y[t] = 2 Re(c . x[t]) + D u[t]
//! ```
//!
//! `A = -exp(log_neg_re) + i * im` keeps every mode stable. Initialisation
//! follows the S4D-Lin recipe (`A_n = -1/2 + i pi n`, log-uniform `dt`).
//! The layer is causal (unidirectional); the scan is evaluated directly,
//! which is linear in sequence length.

use std::ops::Range;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rand::Rng;

use super::params::{fill, Init, ParamLayout};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsmInit {
    pub dt_min: f64,
    pub dt_max: f64,
}

impl Default for SsmInit {
    fn default() -> Self {
        Self {
            dt_min: 1e-3,
            dt_max: 1e-1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ssm {
    pub channels: usize,
    pub modes: usize,
    log_dt: Range<usize>,
    log_neg_re: Range<usize>,
    im: Range<usize>,
    c: Range<usize>,
    skip: Range<usize>,
}

/// Discretised coefficients of all channels, flattened to `h * modes + k`.
struct Discrete {
    ar: Vec<f64>,
    ai: Vec<f64>,
    br: Vec<f64>,
    bi: Vec<f64>,
    cr: Vec<f64>,
    ci: Vec<f64>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    big_a: Vec<Complex64>,
    dt: Vec<f64>,
}

/// Steps between stored states; the backward pass recomputes the states of
/// one chunk at a time from these checkpoints.
const CHUNK: usize = 32;

pub struct SsmCache {
    /// State entering each chunk, `[chunk][h * modes + k]`.
    ckpt_re: Vec<f64>,
    ckpt_im: Vec<f64>,
}

impl Ssm {
    pub fn new(layout: &mut ParamLayout, name: &str, channels: usize, modes: usize) -> Self {
        Self {
            channels,
            modes,
            log_dt: layout.add(format!("{name}.log_dt"), &[channels]),
            log_neg_re: layout.add(format!("{name}.log_neg_re"), &[channels, modes]),
            im: layout.add(format!("{name}.im"), &[channels, modes]),
            c: layout.add(format!("{name}.c"), &[channels, modes, 2]),
            skip: layout.add(format!("{name}.skip"), &[channels]),
        }
    }

    pub fn init<R: Rng + ?Sized>(&self, params: &mut [f64], init: SsmInit, rng: &mut R) {
        let (lo, hi) = (init.dt_min.ln(), init.dt_max.ln());
        fill(&mut params[self.log_dt.clone()], Init::Uniform(lo, hi), rng);
        params[self.log_neg_re.clone()].fill(0.5f64.ln());
        for (i, v) in params[self.im.clone()].iter_mut().enumerate() {
            *v = std::f64::consts::PI * (i % self.modes) as f64;
        }
        fill(
            &mut params[self.c.clone()],
            Init::Normal((0.5f64).sqrt() / (self.modes as f64).sqrt()),
            rng,
        );
        fill(&mut params[self.skip.clone()], Init::Normal(1.0), rng);
    }

    fn discretise(&self, params: &[f64]) -> Discrete {
        let total = self.channels * self.modes;
        let mut d = Discrete {
            ar: Vec::with_capacity(total),
            ai: Vec::with_capacity(total),
            br: Vec::with_capacity(total),
            bi: Vec::with_capacity(total),
            cr: Vec::with_capacity(total),
            ci: Vec::with_capacity(total),
            a: Vec::with_capacity(total),
            b: Vec::with_capacity(total),
            big_a: Vec::with_capacity(total),
            dt: Vec::with_capacity(self.channels),
        };
        for h in 0..self.channels {
            let dt = params[self.log_dt.start + h].exp();
            d.dt.push(dt);
            for k in 0..self.modes {
                let idx = h * self.modes + k;
                let re = -params[self.log_neg_re.start + idx].exp();
                let big_a = Complex64::new(re, params[self.im.start + idx]);
                let a = (big_a * dt).exp();
                let b = (a - 1.0) / big_a;
                let cidx = self.c.start + 2 * idx;
                d.ar.push(a.re);
                d.ai.push(a.im);
                d.br.push(b.re);
                d.bi.push(b.im);
                d.cr.push(params[cidx]);
                d.ci.push(params[cidx + 1]);
                d.a.push(a);
                d.b.push(b);
                d.big_a.push(big_a);
            }
        }
        d
    }

    /// Recomputes the states of one chunk from its checkpoint.
    fn replay(
        &self,
        co: &Discrete,
        ut: &Array2<f64>,
        cache: &SsmCache,
        chunk: usize,
        buf_re: &mut [f64],
        buf_im: &mut [f64],
    ) {
        let n = self.modes;
        let width = self.channels * n;
        let len = ut.nrows();
        buf_re[..width].copy_from_slice(&cache.ckpt_re[chunk * width..(chunk + 1) * width]);
        buf_im[..width].copy_from_slice(&cache.ckpt_im[chunk * width..(chunk + 1) * width]);
        let start = chunk * CHUNK;
        for (j, t) in (start..len.min(start + CHUNK)).enumerate() {
            let urow = ut.row(t);
            let (prev_re, cur_re) = buf_re[j * width..(j + 2) * width].split_at_mut(width);
            let (prev_im, cur_im) = buf_im[j * width..(j + 2) * width].split_at_mut(width);
            for h in 0..self.channels {
                let uh = urow[h];
                for k in h * n..(h + 1) * n {
                    cur_re[k] = co.ar[k] * prev_re[k] - co.ai[k] * prev_im[k] + co.br[k] * uh;
                    cur_im[k] = co.ar[k] * prev_im[k] + co.ai[k] * prev_re[k] + co.bi[k] * uh;
                }
            }
        }
    }

    /// `u` is `[channels, T]`.
    pub fn forward(&self, params: &[f64], u: ArrayView2<f64>) -> (Array2<f64>, SsmCache) {
        let (channels, len) = u.dim();
        debug_assert_eq!(channels, self.channels);
        let n = self.modes;
        let width = channels * n;
        let co = self.discretise(params);
        let skip = &params[self.skip.clone()];
        let ut = u.t().as_standard_layout().into_owned();
        let mut yt = Array2::<f64>::zeros((len, channels));
        let chunks = len.div_ceil(CHUNK);
        let mut ckpt_re = Vec::with_capacity(chunks * width);
        let mut ckpt_im = Vec::with_capacity(chunks * width);
        let mut xr = vec![0.0; width];
        let mut xi = vec![0.0; width];
        for t in 0..len {
            if t % CHUNK == 0 {
                ckpt_re.extend_from_slice(&xr);
                ckpt_im.extend_from_slice(&xi);
            }
            let urow = ut.row(t);
            let mut yrow = yt.row_mut(t);
            for h in 0..channels {
                let uh = urow[h];
                let r = h * n..(h + 1) * n;
                let mut acc = 0.0;
                for ((((((xr, xi), ar), ai), br), bi), (cr, ci)) in xr[r.clone()]
                    .iter_mut()
                    .zip(xi[r.clone()].iter_mut())
                    .zip(&co.ar[r.clone()])
                    .zip(&co.ai[r.clone()])
                    .zip(&co.br[r.clone()])
                    .zip(&co.bi[r.clone()])
                    .zip(co.cr[r.clone()].iter().zip(&co.ci[r.clone()]))
                {
                    let nr = ar * *xr - ai * *xi + br * uh;
                    let ni = ar * *xi + ai * *xr + bi * uh;
                    *xr = nr;
                    *xi = ni;
                    acc += cr * nr - ci * ni;
                }
                yrow[h] = 2.0 * acc + skip[h] * uh;
            }
        }
        let y = yt.t().as_standard_layout().into_owned();
        (y, SsmCache { ckpt_re, ckpt_im })
    }

    pub fn backward(
        &self,
        params: &[f64],
        u: ArrayView2<f64>,
        cache: &SsmCache,
        gy: ArrayView2<f64>,
        grads: &mut [f64],
    ) -> Array2<f64> {
        let (channels, len) = u.dim();
        let n = self.modes;
        let width = channels * n;
        let co = self.discretise(params);
        let skip = &params[self.skip.clone()];
        let ut = u.t().as_standard_layout().into_owned();
        let gyt = gy.t().as_standard_layout().into_owned();
        let mut gut = Array2::<f64>::zeros((len, channels));
        // carry holds the adjoint of x[t+1]
        let mut carry_r = vec![0.0; width];
        let mut carry_i = vec![0.0; width];
        let (mut gar, mut gai) = (vec![0.0; width], vec![0.0; width]);
        let (mut gbr, mut gbi) = (vec![0.0; width], vec![0.0; width]);
        let (mut gcr, mut gci) = (vec![0.0; width], vec![0.0; width]);
        let mut gskip = vec![0.0; channels];
        let mut buf_re = vec![0.0; (CHUNK + 1) * width];
        let mut buf_im = vec![0.0; (CHUNK + 1) * width];
        let mut replayed_chunk = usize::MAX;
        let mut g2x = vec![0.0; width];
        let mut ux = vec![0.0; width];
        let mut contrib = vec![0.0; width];
        for t in (0..len).rev() {
            let urow = ut.row(t);
            let gyrow = gyt.row(t);
            let mut gurow = gut.row_mut(t);
            let chunk = t / CHUNK;
            if chunk != replayed_chunk {
                self.replay(&co, &ut, cache, chunk, &mut buf_re, &mut buf_im);
                replayed_chunk = chunk;
            }
            // buf row 0 is x[chunk start - 1], row j + 1 is x[chunk start + j]
            let j = t - chunk * CHUNK;
            let xr_t = &buf_re[(j + 1) * width..(j + 2) * width];
            let xi_t = &buf_im[(j + 1) * width..(j + 2) * width];
            let pr_t = &buf_re[j * width..(j + 1) * width];
            let pi_t = &buf_im[j * width..(j + 1) * width];
            for h in 0..channels {
                let g = gyrow[h];
                gskip[h] += g * urow[h];
                g2x[h * n..(h + 1) * n].fill(2.0 * g);
                ux[h * n..(h + 1) * n].fill(urow[h]);
            }
            let carry_r = &mut carry_r[..width];
            let carry_i = &mut carry_i[..width];
            let (ar, ai, br, bi, cr, ci) = (
                &co.ar[..width],
                &co.ai[..width],
                &co.br[..width],
                &co.bi[..width],
                &co.cr[..width],
                &co.ci[..width],
            );
            let (g2x, ux, contrib) = (&g2x[..width], &ux[..width], &mut contrib[..width]);
            let (xr_t, xi_t, pr_t, pi_t) = (&xr_t[..width], &xi_t[..width], &pr_t[..width], &pi_t[..width]);
            let (gar, gai) = (&mut gar[..width], &mut gai[..width]);
            let (gbr, gbi) = (&mut gbr[..width], &mut gbi[..width]);
            let (gcr, gci) = (&mut gcr[..width], &mut gci[..width]);
            for k in 0..width {
                let g2 = g2x[k];
                let uk = ux[k];
                // gx = 2 g conj(c) + conj(a) carry
                let gxr = g2 * cr[k] + ar[k] * carry_r[k] + ai[k] * carry_i[k];
                let gxi = -g2 * ci[k] + ar[k] * carry_i[k] - ai[k] * carry_r[k];
                carry_r[k] = gxr;
                carry_i[k] = gxi;
                // gc += 2 g conj(x[t]); gb += gx u; ga += gx conj(x[t-1])
                gcr[k] += g2 * xr_t[k];
                gci[k] -= g2 * xi_t[k];
                gbr[k] += gxr * uk;
                gbi[k] += gxi * uk;
                gar[k] += gxr * pr_t[k] + gxi * pi_t[k];
                gai[k] += gxi * pr_t[k] - gxr * pi_t[k];
                contrib[k] = br[k] * gxr + bi[k] * gxi;
            }
            for h in 0..channels {
                gurow[h] = skip[h] * gyrow[h] + contrib[h * n..(h + 1) * n].iter().sum::<f64>();
            }
        }
        for h in 0..channels {
            grads[self.skip.start + h] += gskip[h];
            let dt = co.dt[h];
            let mut gdt = 0.0;
            for k in h * n..(h + 1) * n {
                let (a, b, big_a) = (co.a[k], co.b[k], co.big_a[k]);
                let ga = Complex64::new(gar[k], gai[k]);
                let gb = Complex64::new(gbr[k], gbi[k]);
                // a = exp(dt A), b = (a - 1) / A
                let db_da = (dt * a - b) / big_a;
                let g_big_a = ga * (a * dt).conj() + gb * db_da.conj();
                gdt += ((big_a * a).conj() * ga).re + (a.conj() * gb).re;
                let neg_re = params[self.log_neg_re.start + k].exp();
                grads[self.log_neg_re.start + k] += -neg_re * g_big_a.re;
                grads[self.im.start + k] += g_big_a.im;
                let cidx = self.c.start + 2 * k;
                grads[cidx] += gcr[k];
                grads[cidx + 1] += gci[k];
            }
            grads[self.log_dt.start + h] += gdt * dt;
        }
        gut.t().as_standard_layout().into_owned()
    }
}
