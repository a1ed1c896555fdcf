//! Flat parameter storage.
//!
//! Every trainable tensor of a network lives in one contiguous `Vec<f64>`.
//! Layers only remember the slice range they own, so optimizers, checkpointing
//! and finite-difference checks can treat the whole model as a single vector.

use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub offset: usize,
    pub shape: Vec<usize>,
}

impl ParamSpec {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.shape.iter().product::<usize>()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    specs: Vec<ParamSpec>,
    len: usize,
}

impl ParamLayout {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reserves a tensor and returns the range it occupies.
    pub fn add(&mut self, name: impl Into<String>, shape: &[usize]) -> Range<usize> {
        let spec = ParamSpec {
            name: name.into(),
            offset: self.len,
            shape: shape.to_vec(),
        };
        let range = spec.range();
        self.len = range.end;
        self.specs.push(spec);
        range
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn specs(&self) -> &[ParamSpec] {
        &self.specs
    }

    pub fn find(&self, name: &str) -> Option<&ParamSpec> {
        self.specs.iter().find(|s| s.name == name)
    }

    pub fn zeros(&self) -> Vec<f64> {
        vec![0.0; self.len]
    }
}

/// Weight initialisation schemes used by the layers.
#[derive(Debug, Clone, Copy)]
pub enum Init {
    Zeros,
    Constant(f64),
    Normal(f64),
    Uniform(f64, f64),
    /// Glorot-uniform for a `[fan_out, fan_in]` matrix.
    Glorot { fan_in: usize, fan_out: usize },
    /// He-normal, suited to rectifier layers.
    He { fan_in: usize },
}

pub fn fill<R: Rng + ?Sized>(slice: &mut [f64], init: Init, rng: &mut R) {
    match init {
        Init::Zeros => slice.fill(0.0),
        Init::Constant(c) => slice.fill(c),
        Init::Normal(std) => {
            let dist = Normal::new(0.0, std).expect("finite std");
            slice.iter_mut().for_each(|v| *v = dist.sample(rng));
        }
        Init::Uniform(lo, hi) => {
            slice.iter_mut().for_each(|v| *v = rng.random_range(lo..hi));
        }
        Init::Glorot { fan_in, fan_out } => {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            slice
                .iter_mut()
                .for_each(|v| *v = rng.random_range(-limit..limit));
        }
        Init::He { fan_in } => {
            let dist = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("finite std");
            slice.iter_mut().for_each(|v| *v = dist.sample(rng));
        }
    }
}
