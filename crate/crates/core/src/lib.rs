//! Scratch detection and intensity estimation from a finger-worn contact
//! microphone and accelerometer.
//!
//! Stages, in pipeline order:
//!
//! - [`labeling`]: power labels (mW) from pressure-tablet traces;
//! - [`signal`]: gap filling and sliding 1-s windows of the ring streams;
//! - [`spectral`]: single-sided amplitude features and min-max scaling;
//! - [`mlp`]: the regression and detection networks;
//! - [`eval`]: leave-one-subject-out evaluation, metrics and tests;
//! - [`io`] and [`pipeline`]: file formats and session-level glue.
//!
//! [`synth`] builds synthetic inputs with known answers.

pub mod activity;
pub mod dataset;
pub mod eval;
pub mod io;
pub mod labeling;
pub mod mlp;
pub mod pipeline;
pub mod signal;
pub mod spectral;
pub mod synth;
