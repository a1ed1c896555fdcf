//! Diagnosis and deterioration targets.

pub mod deterioration;
pub mod icd;
pub mod matrix;
mod ternary;
pub mod vocab;

pub use deterioration::{Category, Criterion, DeteriorationSpec, Target};
pub use icd::{normalize_icd, truncate_and_propagate, IcdMap};
pub use matrix::{LabelKind, LabelMatrix, LabelSpace};
pub use ternary::Ternary;
pub use vocab::{build_vocab, diagnosis_labels, sample_codes, DiagnosisLabels, DiagnosisVocab};
