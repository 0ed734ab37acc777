//! Process monitoring with neural component analysis (NCA).
//!
//! NCA pairs a feedforward encoder with an orthonormal linear decoder and fits
//! them alternately: gradient descent for the encoder, a reduced-rank
//! Procrustes rotation for the decoder frame. The fitted features feed
//! Hotelling-style T² and SPE statistics whose control limits come from
//! Gaussian kernel density estimates of the training statistics. PCA, kernel
//! PCA and a plain autoencoder share the same detector interface for
//! comparison, and [`evaluation`] scores them by missed-detection and
//! false-alarm rates.

pub mod baselines;
pub mod dataset;
pub mod detector;
pub mod encoder;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod monitoring;
pub mod nca;
pub mod par;
pub mod pipeline;
mod serde_mat;

pub use dataset::{DataMatrix, FaultKind, FaultSpec, LabeledRun, Scaler};
pub use detector::{Detector, FitSettings, Method};
pub use error::{Error, ErrorClass, Result};
pub use monitoring::{ControlLimits, FeatureStats, MonitorRecord};
pub use nca::{NcaFitConfig, NcaModel};
pub use pipeline::{DimSpec, ModelEnvelope};
