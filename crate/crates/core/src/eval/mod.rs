//! AUROC with bootstrap intervals and grouped reports.

pub mod auroc;
pub mod bootstrap;
pub mod report;

pub use auroc::{auroc, macro_auroc, mean_defined, RankedLabel};
pub use bootstrap::{bootstrap_auroc, percentile, resample_weights, BootstrapResult, Interval, LabelScore};
pub use report::{
    chapter_report, deterioration_report, evaluate, improvement_table, relative_improvement, BootstrapConfig, ChapterMap, ChapterRange,
    EvalReport, GroupRow,
};
