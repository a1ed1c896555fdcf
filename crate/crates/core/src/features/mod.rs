//! Clinical-routine and ECG machine-measurement features of the first 90
//! minutes of a visit.

mod assemble;
pub mod biometrics;
pub mod ecg;
mod matrix;
pub mod outliers;
pub mod trends;
pub mod units;

pub use assemble::{assemble_features, FeatureContext, FeatureLayout, FeatureVector, CATEGORICAL};
pub use biometrics::match_biometrics;
pub use ecg::extract_ecg_features;
pub use matrix::{mask_name, ColumnInfo, ColumnKind, FeatureHeader, FeatureMatrix};
pub use outliers::{clean_measurement, OutlierRule, OutlierRuleSet};
pub use trends::{aggregate_trends, TrendAggregate, STATISTICS};
pub use units::{convert, normalize_unit};
