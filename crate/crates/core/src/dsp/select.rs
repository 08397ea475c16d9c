use ndarray::{Array2, Array3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::band::{bandpass, SpectralBand};
use super::csp::{csp_fit, filtered_energy, CspPair};
use crate::error::{Error, Result};
use crate::metrics::average_precision;
use crate::partition::stratified_split;
use crate::signal::{split_into_windows, Class, Segment};

/// Fraction of segments used to fit CSP during band selection; the rest score it.
pub const BAND_FIT_FRACTION: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandScore {
    pub band: SpectralBand,
    pub pr_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSelection {
    pub band: SpectralBand,
    pub scores: Vec<BandScore>,
}

/// Band-passes a whole segment (continuously, not per window) and re-splits it.
pub fn bandpass_segment(seg: &Segment, band: SpectralBand) -> Result<Array3<f64>> {
    let filtered = bandpass(seg.continuous().view(), band, seg.fs)?;
    split_into_windows(filtered.view(), seg.window_len())
}

/// Fits CSP on the band-passed windows of both classes.
pub fn fit_csp_in_band(segments: &[&Segment], band: SpectralBand) -> Result<CspPair> {
    let filtered: Vec<(Class, Array3<f64>)> = segments
        .par_iter()
        .map(|s| Ok((s.label, bandpass_segment(s, band)?)))
        .collect::<Result<_>>()?;
    let mut w0 = Vec::new();
    let mut w1 = Vec::new();
    for (label, data) in &filtered {
        let dst = if *label == Class::Interictal { &mut w0 } else { &mut w1 };
        dst.extend(data.outer_iter());
    }
    let mut pair = csp_fit(&w0, &w1)?;
    pair.band = Some(band);
    Ok(pair)
}

/// CSP in `band` when given, otherwise on the unfiltered windows.
pub fn fit_csp(segments: &[&Segment], band: Option<SpectralBand>) -> Result<CspPair> {
    match band {
        Some(b) => fit_csp_in_band(segments, b),
        None => {
            let mut w0 = Vec::new();
            let mut w1 = Vec::new();
            for s in segments {
                let dst = if s.label == Class::Interictal { &mut w0 } else { &mut w1 };
                dst.extend(s.data.outer_iter());
            }
            csp_fit(&w0, &w1)
        }
    }
}

/// Energy-ratio score `E1 / (E0 + E1)` of a band-passed `C × T` signal.
pub fn energy_score(signal: &Array2<f64>, csp: &CspPair) -> f64 {
    let e0 = filtered_energy(signal.view(), &csp.w0);
    let e1 = filtered_energy(signal.view(), &csp.w1);
    if e0 + e1 > 0.0 {
        e1 / (e0 + e1)
    } else {
        0.5
    }
}

/// Picks the band whose CSP energy classifier has the highest PR-AUC on a
/// held-out part of the training segments. Ties go to the earlier band.
pub fn select_band(segments: &[&Segment], bands: &[SpectralBand], seed: u64) -> Result<BandSelection> {
    if bands.is_empty() {
        return Err(Error::Parameter("empty band list".into()));
    }
    if bands.len() == 1 {
        return Ok(BandSelection {
            band: bands[0],
            scores: Vec::new(),
        });
    }
    let labels: Vec<Class> = segments.iter().map(|s| s.label).collect();
    let (fit_idx, score_idx) = stratified_split(&labels, BAND_FIT_FRACTION, seed)?;
    let fit: Vec<&Segment> = fit_idx.iter().map(|&i| segments[i]).collect();

    let mut scores = Vec::with_capacity(bands.len());
    for &band in bands {
        let csp = fit_csp_in_band(&fit, band)?;
        let (s, pos): (Vec<f64>, Vec<bool>) = score_idx
            .par_iter()
            .map(|&i| {
                let seg = segments[i];
                let x = bandpass(seg.continuous().view(), band, seg.fs)?;
                Ok((energy_score(&x, &csp), seg.label.is_positive()))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        let pr_auc = average_precision(&s, &pos)?;
        log::debug!("band {band}: PR-AUC {pr_auc:.4}");
        scores.push(BandScore { band, pr_auc });
    }
    let best = scores
        .iter()
        .fold(&scores[0], |best, s| if s.pr_auc > best.pr_auc { s } else { best });
    Ok(BandSelection {
        band: best.band,
        scores,
    })
}
