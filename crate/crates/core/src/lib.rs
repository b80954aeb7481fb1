//! Speech data augmentation for real-time voice-conversion training.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
pub mod augment;
pub mod bench;
pub mod dataset;
pub mod error;
pub mod features;
pub mod pitch;
pub mod synth;
#[cfg(test)]
mod testutil;
pub mod votrans;

pub use audio::{measure_rms, read_wav, resample, write_wav, AudioBuffer};
pub use augment::{apply_scheme, AugmentationSpec, Provenance, Scheme};
pub use dataset::{build_manifest, materialize, subset_by_duration, DatasetManifest, NoiseBank};
pub use error::{Error, Result};
pub use pitch::{estimate_f0, semitone_ratio, smooth_contour, F0Contour};
