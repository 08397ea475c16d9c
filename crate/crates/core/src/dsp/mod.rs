//! Preprocessing, band-pass filtering and CSP spatial filters.

mod band;
mod csp;
mod filter;
mod resample;
mod select;

pub use band::{bandpass, SpectralBand};
pub use csp::{csp_fit, filtered_energy, spatial_filter, CspPair, COVARIANCE_RIDGE};
pub use filter::{butterworth_bandpass, iir_notch, notch_60hz, Biquad, Sos, BANDPASS_ORDER};
pub use resample::{rational_ratio, resample, resample_512, TARGET_FS};
pub use select::{
    bandpass_segment, fit_csp, energy_score, fit_csp_in_band, select_band, BandScore, BandSelection,
    BAND_FIT_FRACTION,
};

use ndarray::{Array2, ArrayView2};

use crate::error::Result;

/// Line-noise notch followed by resampling to 512 Hz.
pub fn preprocess(signal: ArrayView2<'_, f64>, fs: f64) -> Result<(Array2<f64>, f64)> {
    let notched = notch_60hz(signal, fs)?;
    resample_512(notched.view(), fs)
}
