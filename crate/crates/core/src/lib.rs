//! Single-microphone speech enhancement with multi-frame MVDR/MPDR filters.
//!
//! Each STFT bin is treated as an independent `N`-tap filtering problem
//! across consecutive frames. Per bin and frame the engine
//!
//! 1. obtains a speech presence probability (model-based, or from external
//!    speech/noise masks),
//! 2. updates the noisy and noise correlation matrices recursively, the
//!    latter with SPP-dependent smoothing,
//! 3. estimates the a-priori SNR and from it the speech interframe
//!    correlation vector,
//! 4. computes the distortionless filter against the diagonally loaded
//!    noise (MFMVDR) or noisy (MFMPDR) matrix and applies it.
//!
//! [`pipeline::enhance`] wires the stages together; the individual modules
//! expose the per-bin building blocks.
// Range checks are written as `!(x > 0.0)` on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
pub mod config;
pub mod covariance;
pub mod error;
pub mod ifc;
pub mod linalg;
pub mod masks;
pub mod metrics;
pub mod mffilter;
pub mod pipeline;
pub mod spp;
pub mod stft;

pub use audio::{read_wav, write_wav, Utterance};
pub use error::{Error, Result};
pub use mffilter::FilterKind;
pub use pipeline::{enhance, enhance_with_report, EnhanceConfig, EnhanceReport, SppSource};
pub use spp::{MaskGrid, MaskSppVariant};
pub use stft::{SpectrogramGrid, StftConfig};
