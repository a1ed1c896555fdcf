pub mod cohort;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod impute;
pub mod ingest;
pub mod labels;
pub mod models;
pub mod pipeline;
pub mod splits;
pub mod synthgen;
pub mod time;

pub use error::{Error, Result};
