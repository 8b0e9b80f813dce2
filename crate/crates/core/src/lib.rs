//! Supervised characterization of a bang-bang driven two-level quantum system.
//!
//! * [`bloch`]: closed-form propagation on the Bloch sphere and the two-bang
//!   north-to-south transfer times.
//! * [`oracle`]: RK4 integrators of the Bloch and Schrödinger equations used
//!   as independent checks.
//! * [`control`], [`dataset`], [`format`]: five-switch controls, the four
//!   labeled datasets and their binary/CSV files.
//! * [`mlp`]: dense ReLU network, backpropagation, Adam, early stopping and
//!   checkpoints.
//! * [`analysis`]: experiments, dataset-size study, mapping sweeps and
//!   monotone segmentation.
//!
//! Data-parallel loops go through [`par`], which falls back to sequential
//! execution when the `parallel` feature is disabled.

pub mod analysis;
pub mod bloch;
pub mod control;
pub mod dataset;
pub mod format;
pub mod mlp;
pub mod oracle;
pub mod par;
pub mod rng;

pub use bloch::{BlochState, Offset, Sign};
pub use control::BangControl;
pub use dataset::{DatasetId, DatasetKind, Record};
pub use mlp::{Mlp, MlpSpec, Preset};
pub use par::ExecMode;
