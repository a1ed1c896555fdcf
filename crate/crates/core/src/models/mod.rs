//! Tree baseline, deep encoders and their training.

pub mod fit;
pub mod gbdt;
pub mod nn;
pub mod preprocess;
pub mod scenario;
pub mod train;

pub use fit::{fit_model, role_rows, score_model, Checkpoint, FittedModel, ScoreMatrix};
pub use gbdt::{Booster, TreeConfig};
pub use scenario::{ModelConfig, ModelSpec, Profile, Scenario};
pub use train::{train_deep, DeepData, DeepModelConfig, EpochLog, TrainOutcome};
