//! Typed readers for the source tables and the waveform store.

mod index;
pub mod registry;
pub mod schema;
mod sources;
pub mod table;
pub mod waveform;

pub use index::SourceIndex;
pub use registry::{Group, Variable, VariableRegistry};
pub use schema::*;
pub use sources::{SourceTables, TableReport};
pub use table::{load_table, read_table, save_table, write_table, Diagnostic, Loaded};
pub use waveform::{load_waveform, WaveformRecord, WaveformStore, LEADS, MACHINE_FEATURES};
