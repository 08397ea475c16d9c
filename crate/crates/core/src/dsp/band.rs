use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::filter::{butterworth_bandpass, BANDPASS_ORDER};
use crate::error::{Error, Result};

/// The nine canonical ECoG passbands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralBand {
    Delta,
    Theta,
    Alpha,
    BetaLow,
    BetaHigh,
    GammaLow,
    GammaMid,
    GammaHigh,
    Hfo,
}

impl SpectralBand {
    pub const ALL: [SpectralBand; 9] = [
        SpectralBand::Delta,
        SpectralBand::Theta,
        SpectralBand::Alpha,
        SpectralBand::BetaLow,
        SpectralBand::BetaHigh,
        SpectralBand::GammaLow,
        SpectralBand::GammaMid,
        SpectralBand::GammaHigh,
        SpectralBand::Hfo,
    ];

    /// Passband edges in Hz.
    pub fn edges(self) -> (f64, f64) {
        match self {
            SpectralBand::Delta => (1.5, 4.0),
            SpectralBand::Theta => (4.0, 8.0),
            SpectralBand::Alpha => (8.0, 15.0),
            SpectralBand::BetaLow => (15.0, 26.0),
            SpectralBand::BetaHigh => (26.0, 35.0),
            SpectralBand::GammaLow => (35.0, 50.0),
            SpectralBand::GammaMid => (50.0, 74.0),
            SpectralBand::GammaHigh => (76.0, 120.0),
            SpectralBand::Hfo => (120.0, 220.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpectralBand::Delta => "delta",
            SpectralBand::Theta => "theta",
            SpectralBand::Alpha => "alpha",
            SpectralBand::BetaLow => "beta_low",
            SpectralBand::BetaHigh => "beta_high",
            SpectralBand::GammaLow => "gamma_low",
            SpectralBand::GammaMid => "gamma_mid",
            SpectralBand::GammaHigh => "gamma_high",
            SpectralBand::Hfo => "hfo",
        }
    }
}

impl fmt::Display for SpectralBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpectralBand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SpectralBand::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown band '{s}'")))
    }
}

/// Zero-phase Butterworth bandpass of every row of a `C × T` signal.
pub fn bandpass(signal: ArrayView2<'_, f64>, band: SpectralBand, fs: f64) -> Result<Array2<f64>> {
    let (lo, hi) = band.edges();
    if hi >= fs / 2.0 {
        return Err(Error::Parameter(format!(
            "band {band} [{lo}, {hi}] Hz is above Nyquist for fs={fs}"
        )));
    }
    Ok(butterworth_bandpass(BANDPASS_ORDER, lo, hi, fs)?.filtfilt_rows(signal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rms_ratio(band: SpectralBand, f: f64) -> f64 {
        let fs = 512.0;
        let n = 10 * 512;
        let x = Array2::from_shape_fn((1, n), |(_, i)| (2.0 * PI * f * i as f64 / fs).sin());
        let y = bandpass(x.view(), band, fs).unwrap();
        let mid = 3 * 512..7 * 512;
        let rms = |a: &Array2<f64>| {
            (mid.clone().map(|i| a[[0, i]] * a[[0, i]]).sum::<f64>() / mid.len() as f64).sqrt()
        };
        rms(&y) / rms(&x)
    }

    #[test]
    fn theta_passes_6hz_and_rejects_40hz() {
        assert!(rms_ratio(SpectralBand::Theta, 6.0) >= 0.95);
        assert!(rms_ratio(SpectralBand::Theta, 40.0) <= 0.1);
    }

    #[test]
    fn in_band_within_five_percent_and_octave_out_minus_20db() {
        for band in SpectralBand::ALL {
            let (lo, hi) = band.edges();
            let centre = (lo * hi).sqrt();
            let r = rms_ratio(band, centre);
            assert!((r - 1.0).abs() < 0.05, "{band} centre ratio {r}");
            assert!(rms_ratio(band, 2.0 * hi) <= 0.1, "{band} above");
            assert!(rms_ratio(band, lo / 2.0) <= 0.1, "{band} below");
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let y = bandpass(Array2::zeros((2, 400)).view(), SpectralBand::Alpha, 512.0).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn band_above_nyquist_rejected() {
        assert!(bandpass(Array2::zeros((1, 100)).view(), SpectralBand::Hfo, 256.0).is_err());
    }

    #[test]
    fn symmetric_pulse_stays_centred() {
        let n = 2048;
        let centre = 1024.0;
        let x = Array2::from_shape_fn((1, n), |(_, i)| {
            let t = (i as f64 - centre) / 6.0;
            (-t * t).exp()
        });
        for band in [SpectralBand::Alpha, SpectralBand::GammaLow] {
            let y = bandpass(x.view(), band, 512.0).unwrap();
            let (num, den) = (0..n).fold((0.0, 0.0), |(a, b), i| {
                let e = y[[0, i]] * y[[0, i]];
                (a + e * i as f64, b + e)
            });
            assert!((num / den - centre).abs() < 1.0);
        }
    }

    #[test]
    fn names_round_trip() {
        for b in SpectralBand::ALL {
            assert_eq!(b.name().parse::<SpectralBand>().unwrap(), b);
            assert_eq!(serde_json::to_string(&b).unwrap(), format!("\"{}\"", b.name()));
        }
    }
}
