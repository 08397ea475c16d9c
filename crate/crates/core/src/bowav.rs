//! Bag-of-waves features: how often each centroid of the two class
//! codebooks is the best match for a segment's windows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::{spatial_filter, CspPair};
use crate::error::{Error, Result};
use crate::partition::mix_seed;
use crate::signal::{Class, Codebook, Segment};
use crate::sikmeans::{assign_batch, fit, Backend, SikmeansConfig};

/// `counts[..k]` come from the interictal filter and codebook, `counts[k..]`
/// from the preictal ones. Each half sums to the segment's window count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub segment_id: String,
    pub label: Class,
    pub counts: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled: Option<Vec<f64>>,
}

impl FeatureVector {
    /// Scaled values when present, raw counts otherwise.
    pub fn values(&self) -> Vec<f64> {
        match &self.scaled {
            Some(s) => s.clone(),
            None => self.counts.iter().map(|&c| c as f64).collect(),
        }
    }
}

/// Smoothed inverse document frequency per waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdfModel {
    #[serde(with = "crate::io::b64::vec")]
    pub idf: Vec<f64>,
    pub n_segments: usize,
}

/// Histogram of zero-based labels over `0..k`.
pub fn bow_counts(labels: &[usize], k: usize) -> Result<Vec<u32>> {
    let mut z = vec![0u32; k];
    for &v in labels {
        *z.get_mut(v)
            .ok_or_else(|| Error::Bounds(format!("label {v} outside 0..{k}")))? += 1;
    }
    Ok(z)
}

fn check_codebooks(cb0: &Codebook, cb1: &Codebook) -> Result<()> {
    if cb0.k() != cb1.k() || cb0.p() != cb1.p() {
        return Err(Error::Config(format!(
            "codebooks disagree: {}x{} vs {}x{}",
            cb0.k(),
            cb0.p(),
            cb1.k(),
            cb1.p()
        )));
    }
    Ok(())
}

/// Learns one codebook per class from the class's spatially filtered
/// training windows. Each class draws its own seed from `cfg.seed`.
pub fn learn_codebooks(train: &[&Segment], csp: &CspPair, cfg: &SikmeansConfig) -> Result<(Codebook, Codebook)> {
    let learn = |class: Class| -> Result<Codebook> {
        let rows = train
            .iter()
            .filter(|s| s.label == class)
            .map(|s| Ok(spatial_filter(s, csp.filter(class), class)?.data))
            .collect::<Result<Vec<_>>>()?;
        if rows.is_empty() {
            return Err(Error::Stratification(format!("no {class} training segments")));
        }
        let views: Vec<_> = rows.iter().map(|r| r.view()).collect();
        let signals = ndarray::concatenate(ndarray::Axis(0), &views)
            .map_err(|e| Error::Shape(e.to_string()))?;
        let cfg = SikmeansConfig {
            seed: mix_seed(cfg.seed, &[class.index() as u64]),
            ..cfg.clone()
        };
        Ok(fit(signals.view(), &cfg, class)?.codebook)
    };
    Ok((learn(Class::Interictal)?, learn(Class::Preictal)?))
}

/// Counts for one segment.
pub fn featurize(
    segment: &Segment,
    csp: &CspPair,
    cb0: &Codebook,
    cb1: &Codebook,
    backend: Backend,
) -> Result<FeatureVector> {
    check_codebooks(cb0, cb1)?;
    if segment.n_channels() != csp.n_channels() {
        return Err(Error::Dimension(format!(
            "segment {} has {} channels, spatial filters have {}",
            segment.id,
            segment.n_channels(),
            csp.n_channels()
        )));
    }
    let k = cb0.k();
    let mut counts = Vec::with_capacity(2 * k);
    for (class, cb) in [(Class::Interictal, cb0), (Class::Preictal, cb1)] {
        let filtered = spatial_filter(segment, csp.filter(class), class)?;
        let labels: Vec<usize> = assign_batch(filtered.data.view(), cb, backend)?
            .into_iter()
            .map(|a| a.centroid)
            .collect();
        counts.extend(bow_counts(&labels, k)?);
    }
    Ok(FeatureVector {
        segment_id: segment.id.clone(),
        label: segment.label,
        counts,
        scaled: None,
    })
}

/// [`featurize`] over many segments, in input order.
pub fn featurize_all(
    segments: &[&Segment],
    csp: &CspPair,
    cb0: &Codebook,
    cb1: &Codebook,
    backend: Backend,
) -> Result<Vec<FeatureVector>> {
    segments
        .par_iter()
        .map(|s| featurize(s, csp, cb0, cb1, backend))
        .collect()
}

/// `idf(i) = ln((1 + n) / (1 + df(i))) + 1` over the training segments.
pub fn idf_fit(train: &[FeatureVector]) -> Result<IdfModel> {
    let first = train
        .first()
        .ok_or_else(|| Error::Parameter("idf needs at least one segment".into()))?;
    let dim = first.counts.len();
    let mut df = vec![0usize; dim];
    for fv in train {
        if fv.counts.len() != dim {
            return Err(Error::Dimension("feature vectors of different lengths".into()));
        }
        for (d, &c) in df.iter_mut().zip(&fv.counts) {
            if c > 0 {
                *d += 1;
            }
        }
    }
    let n = train.len() as f64;
    Ok(IdfModel {
        idf: df
            .into_iter()
            .map(|d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
            .collect(),
        n_segments: train.len(),
    })
}

/// Sets `scaled = counts ⊙ idf`; `counts` are left as they are.
pub fn idf_transform(fv: &FeatureVector, model: &IdfModel) -> Result<FeatureVector> {
    if fv.counts.len() != model.idf.len() {
        return Err(Error::Dimension(format!(
            "feature length {} vs idf length {}",
            fv.counts.len(),
            model.idf.len()
        )));
    }
    let mut out = fv.clone();
    out.scaled = Some(fv.counts.iter().zip(&model.idf).map(|(&c, w)| c as f64 * w).collect());
    Ok(out)
}
