//! Shift-invariant waveform codebooks for preictal/interictal ECoG
//! segment classification.
//!
//! The pipeline: CSP spatial filtering ([`dsp`]), class-specific codebooks
//! from shift-invariant spherical k-means ([`sikmeans`]), bag-of-waves
//! counts ([`bowav`]), two classifiers ([`classify`]), metrics and χ²
//! waveform ranking ([`metrics`], [`ranking`]), cross-validated
//! hyperparameter search ([`cv`]), and end-to-end orchestration
//! ([`pipeline`]).

pub mod bowav;
pub mod classify;
pub mod cv;
pub mod dsp;
pub mod error;
pub mod io;
pub mod labeling;
pub mod metrics;
pub mod partition;
pub mod pipeline;
pub mod ranking;
pub mod signal;
pub mod sikmeans;
pub mod synth;

pub use error::{Error, Result};
pub use signal::{
    concat_windows, cosine_distance, extract_window, split_into_windows, Assignment, Class, Codebook,
    FilteredSegment, Segment,
};
