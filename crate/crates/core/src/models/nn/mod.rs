//! Small dense-network toolkit with explicit backward passes in 64-bit
//! arithmetic: the waveform state-space encoder, the tabular encoder, the
//! fusion head, the masked loss and the optimizer.

pub mod encoder;
pub mod layers;
pub mod loss;
pub mod model;
pub mod optim;
pub mod params;
pub mod ssm;

pub use encoder::{TabularEncoder, TabularInput, WaveEncoder};
pub use loss::{masked_bce, masked_bce_with_count};
pub use model::{DeepNet, InputGrads, Modality, NetInput, NetworkShape};
pub use optim::AdamW;
pub use params::{ParamLayout, ParamSpec};
