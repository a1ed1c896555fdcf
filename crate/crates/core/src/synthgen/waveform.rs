//! Generic periodic 12-lead signals with optional planted sinusoids.

use std::f64::consts::TAU;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::ingest::waveform::expected_len;
use crate::ingest::LEADS;

/// Base rhythm: a few harmonics of the heart rate with per-lead gains.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseRhythm {
    pub heart_rate: f64,
    pub harmonics: Vec<f64>,
    pub lead_gain: [f64; LEADS],
}

impl BaseRhythm {
    pub fn new(heart_rate: f64) -> Self {
        Self {
            heart_rate,
            harmonics: vec![1.0, 0.5, 0.25],
            lead_gain: [1.0, 0.8, -0.3, -0.9, 0.6, 0.4, 0.3, 0.7, 1.1, 1.2, 1.0, 0.8],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedComponent {
    pub frequency: f64,
    pub amplitude: f64,
}

/// `[12, rate * 10]` matrix: base rhythm plus planted sinusoids plus white
/// noise. The noise draw depends only on `seed`, so two calls differing in
/// planted amplitude differ by exactly the planted sinusoid.
pub fn generate_waveform(
    base: &BaseRhythm,
    planted: &[PlantedComponent],
    noise: f64,
    rate: f64,
    seed: u64,
) -> Array2<f64> {
    let len = expected_len(rate);
    let f0 = base.heart_rate / 60.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<f64> = (0..base.harmonics.len()).map(|_| rng.random_range(0.0..TAU)).collect();
    let lead_phase: [f64; LEADS] = std::array::from_fn(|l| l as f64 * 0.37);
    let mut x = Array2::zeros((LEADS, len));
    for l in 0..LEADS {
        for i in 0..len {
            let t = i as f64 / rate;
            let mut v = 0.0;
            for (k, (&a, &p)) in base.harmonics.iter().zip(&phases).enumerate() {
                v += a * (TAU * (k + 1) as f64 * f0 * t + p).cos();
            }
            v *= base.lead_gain[l];
            for c in planted {
                v += c.amplitude * (TAU * c.frequency * t + lead_phase[l]).sin();
            }
            x[[l, i]] = v;
        }
    }
    if noise > 0.0 {
        let n = Normal::new(0.0, noise).expect("positive noise");
        x.mapv_inplace(|v| v + n.sample(&mut rng));
    }
    x
}
