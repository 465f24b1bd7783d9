//! Training-time data mollification.
//!
//! Inputs are corrupted during training by either variance-preserving
//! Gaussian noising or heat-equation blurring in the DCT domain, and the
//! label is degraded by an amount matched to the corruption intensity.
//! The crate also ships the supporting pieces needed to run and evaluate
//! that procedure at desk scale: soft-label likelihoods, Monte-Carlo
//! marginal-likelihood estimators, a small deterministic MLP trainer,
//! calibration metrics and the compression/spectral analyses.
//!
//! The modules are layered bottom-up:
//!
//! - [`tensor`]: images, standardization, the orthonormal 2-D DCT and the
//!   `MOL1` dataset container.
//! - [`schedules`]: noise, blur and label-decay schedules plus the Beta
//!   temperature prior.
//! - [`mollifier`]: noising, blurring and per-batch mollification.
//! - [`labels`]: one-hot, tempered and smoothed labels and the Dirichlet
//!   reading of the soft-label cross-entropy.
//! - [`likelihood`]: cross-entropies, the normalizer of the smoothed-label
//!   likelihood and Monte-Carlo estimators of the log marginal likelihood.
//! - [`trainer`]: single-hidden-layer MLP with manual gradients and SGD.
//! - [`metrics`]: error, NLL and ECE.
//! - [`analysis`]: corruption suite, PNG information curve and spectral
//!   deltas.
//! - [`cli`]: the command implementations behind the `mollify` binary.

// Validation is written as `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod labels;
pub mod likelihood;
pub mod metrics;
pub mod mollifier;
pub mod rng;
pub mod schedules;
pub mod synthetic;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
pub use labels::{LabelKind, SoftLabel};
pub use mollifier::{Mode, MollificationParams, MollifiedExample};
pub use schedules::ScheduleConfig;
pub use tensor::{ChannelStats, Dataset, ImageTensor, SpectralGrid};
