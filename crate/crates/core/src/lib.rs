//! Variational mode decomposition toolkit: whole-signal VMD/MVMD, short-time
//! VMD in non-dynamic, dynamic and streaming forms, signal generators and
//! evaluation metrics.

pub mod config;
pub mod error;
pub mod frequency;
pub mod metrics;
pub mod modes;
pub mod online;
pub mod signal;
pub mod signals;
pub mod spectral;
pub mod stvmd;
pub mod vmd;

pub use config::{
    validate_config, CheckedConfig, DecompositionConfig, InitScheme, WindowKind, RESIDUAL_INDEX,
};
pub use error::{Error, Result};
pub use frequency::{init_frequencies, FrequencyState};
pub use modes::{IterationView, ModeSet, Observer, SolveStats};
pub use signal::MultichannelSignal;
pub use stvmd::{stvmd_decompose, stvmd_decompose_observed, Variant};
pub use vmd::{vmd_decompose, vmd_decompose_observed};
