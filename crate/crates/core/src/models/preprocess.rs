//! Input normalisation for the deep models, fitted on training rows only.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Low-pass FIR taps (Hamming-windowed sinc) for decimation by `factor`.
fn lowpass_taps(factor: usize) -> Vec<f64> {
    let n = 20 * factor + 1;
    let mid = (n / 2) as f64;
    let cutoff = 0.5 / factor as f64;
    let mut taps: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 - mid;
            let sinc = if t == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * std::f64::consts::PI * cutoff * t).sin() / (std::f64::consts::PI * t)
            };
            let w = 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
            sinc * w
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Reflect index into `0..len` without repeating the edge sample.
fn reflect(i: isize, len: usize) -> usize {
    let n = len as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut k = i.rem_euclid(period);
    if k >= n {
        k = period - k;
    }
    k as usize
}

/// Anti-aliased integer-factor decimation of `[leads, T]` input. The filter
/// is applied zero-phase with reflected edges.
pub fn decimate(x: ArrayView2<f64>, from_rate: f64, to_rate: f64) -> Result<Array2<f64>> {
    if !(from_rate > 0.0 && to_rate > 0.0) {
        return Err(Error::Config(format!("sampling rates must be positive ({from_rate} -> {to_rate})")));
    }
    let ratio = from_rate / to_rate;
    let factor = ratio.round() as usize;
    if factor == 0 || (ratio - factor as f64).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "cannot resample {from_rate} Hz to {to_rate} Hz: ratio is not a positive integer"
        )));
    }
    if factor == 1 {
        return Ok(x.to_owned());
    }
    let taps = lowpass_taps(factor);
    let half = (taps.len() / 2) as isize;
    let len = x.ncols();
    let out_len = len.div_ceil(factor);
    let mut out = Array2::zeros((x.nrows(), out_len));
    for (lead, row) in x.rows().into_iter().enumerate() {
        for k in 0..out_len {
            let centre = (k * factor) as isize;
            let mut acc = 0.0;
            for (j, &t) in taps.iter().enumerate() {
                acc += t * row[reflect(centre + j as isize - half, len)];
            }
            out[[lead, k]] = acc;
        }
    }
    Ok(out)
}

/// Per-lead mean and standard deviation over all training samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl LeadStats {
    pub fn fit<'a>(waveforms: impl IntoIterator<Item = ArrayView2<'a, f64>>) -> Result<Self> {
        let mut sum: Vec<f64> = Vec::new();
        let mut sq: Vec<f64> = Vec::new();
        let mut count = 0usize;
        for w in waveforms {
            if sum.is_empty() {
                sum = vec![0.0; w.nrows()];
                sq = vec![0.0; w.nrows()];
            } else if w.nrows() != sum.len() {
                return Err(Error::Shape(format!("{} leads, expected {}", w.nrows(), sum.len())));
            }
            for (l, row) in w.rows().into_iter().enumerate() {
                sum[l] += row.sum();
                sq[l] += row.iter().map(|v| v * v).sum::<f64>();
            }
            count += w.ncols();
        }
        if count == 0 {
            return Err(Error::Data("no training waveforms to normalise".into()));
        }
        let n = count as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let s = (q / n - m * m).max(0.0).sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, w: &mut Array2<f64>) -> Result<()> {
        if w.nrows() != self.mean.len() {
            return Err(Error::Shape(format!("{} leads, statistics cover {}", w.nrows(), self.mean.len())));
        }
        for (l, mut row) in w.axis_iter_mut(Axis(0)).enumerate() {
            let (m, s) = (self.mean[l], self.std[l]);
            row.mapv_inplace(|v| (v - m) / s);
        }
        Ok(())
    }
}

/// Column-wise z-scores for imputed numeric inputs. Constant columns keep
/// unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::Data("no training rows to standardise".into()));
        }
        let mean = x.mean_axis(Axis(0)).expect("non-empty").to_vec();
        let std = x
            .std_axis(Axis(0), 0.0)
            .iter()
            .map(|&s| if s > 1e-12 { s } else { 1.0 })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: &mut Array2<f64>) -> Result<()> {
        if x.ncols() != self.mean.len() {
            return Err(Error::Shape(format!("{} columns, standardiser has {}", x.ncols(), self.mean.len())));
        }
        for mut row in x.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn tone(freq: f64, rate: f64, len: usize) -> Array2<f64> {
        Array2::from_shape_fn((1, len), |(_, t)| (2.0 * std::f64::consts::PI * freq * t as f64 / rate).sin())
    }

    fn rms(x: &Array2<f64>) -> f64 {
        // Ignore edges where reflection distorts the tone.
        let n = x.ncols();
        let inner = x.slice(ndarray::s![.., n / 8..n - n / 8]);
        (inner.iter().map(|v| v * v).sum::<f64>() / inner.len() as f64).sqrt()
    }

    #[test]
    fn passband_kept_and_alias_band_suppressed() {
        let low = decimate(tone(5.0, 100.0, 1000).view(), 100.0, 25.0).unwrap();
        assert_eq!(low.dim(), (1, 250));
        assert!((rms(&low) - 0.5f64.sqrt()).abs() < 0.02, "{}", rms(&low));
        let high = decimate(tone(20.0, 100.0, 1000).view(), 100.0, 25.0).unwrap();
        assert!(rms(&high) < 0.01, "{}", rms(&high));
    }

    #[test]
    fn non_integer_ratio_is_rejected() {
        assert!(decimate(tone(1.0, 100.0, 100).view(), 100.0, 30.0).is_err());
        let same = decimate(tone(1.0, 100.0, 100).view(), 100.0, 100.0).unwrap();
        assert_eq!(same, tone(1.0, 100.0, 100));
    }

    #[test]
    fn lead_stats_zero_mean_unit_variance() {
        let a = Array2::from_shape_fn((2, 50), |(l, t)| (l as f64 + 1.0) * t as f64);
        let stats = LeadStats::fit([a.view()]).unwrap();
        let mut b = a.clone();
        stats.apply(&mut b).unwrap();
        for row in b.rows() {
            assert!(row.mean().unwrap().abs() < 1e-12);
            assert!((row.std(0.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_column_keeps_scale() {
        let x = ndarray::array![[1.0, 3.0], [1.0, 5.0]];
        let s = Standardizer::fit(x.view()).unwrap();
        let mut y = x.clone();
        s.apply(&mut y).unwrap();
        assert_eq!(y, ndarray::array![[0.0, -1.0], [0.0, 1.0]]);
    }
}
