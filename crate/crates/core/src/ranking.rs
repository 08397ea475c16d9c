//! χ² ranking of the master codebook (interictal centroids followed by
//! preictal centroids) by how unevenly each waveform occurs across classes.

use serde::{Deserialize, Serialize};

use crate::bowav::FeatureVector;
use crate::error::{Error, Result};
use crate::signal::Class;

/// Occurrences of one master-codebook waveform per class, against the total
/// window count of each class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub waveform_index: usize,
    pub o0: u64,
    pub o1: u64,
    pub m0: u64,
    pub m1: u64,
}

impl ContingencyTable {
    pub fn new(waveform_index: usize, o0: u64, o1: u64, m0: u64, m1: u64) -> Result<ContingencyTable> {
        if o0 > m0 || o1 > m1 {
            return Err(Error::Bounds(format!(
                "occurrences ({o0}, {o1}) exceed class totals ({m0}, {m1})"
            )));
        }
        Ok(ContingencyTable { waveform_index, o0, o1, m0, m1 })
    }

    fn margins(&self) -> [f64; 4] {
        let (o0, o1, m0, m1) = (self.o0 as f64, self.o1 as f64, self.m0 as f64, self.m1 as f64);
        [o0 + o1, m0 + m1 - o0 - o1, m0, m1]
    }
}

/// Pearson χ² with one degree of freedom and no continuity correction.
pub fn chi2_statistic(t: &ContingencyTable) -> Result<f64> {
    if t.o0 > t.m0 || t.o1 > t.m1 {
        return Err(Error::Bounds("occurrences exceed class totals".into()));
    }
    let margins = t.margins();
    if margins.contains(&0.0) {
        return Err(Error::Numerical(format!(
            "waveform {}: zero margin in contingency table",
            t.waveform_index
        )));
    }
    let a = t.o0 as f64;
    let b = t.o1 as f64;
    let c = (t.m0 - t.o0) as f64;
    let d = (t.m1 - t.o1) as f64;
    let n = a + b + c + d;
    let det = a * d - b * c;
    Ok(n * det * det / margins.iter().product::<f64>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedWaveform {
    /// Position in the master codebook.
    pub index: usize,
    /// Codebook the waveform was learned for.
    pub codebook: Class,
    /// Row within that codebook.
    pub centroid: usize,
    pub chi2: f64,
    pub table: ContingencyTable,
}

/// Per-waveform tables from test-set feature vectors, whose halves count the
/// windows assigned under each codebook.
pub fn contingency_tables(features: &[FeatureVector]) -> Result<Vec<ContingencyTable>> {
    let first = features
        .first()
        .ok_or_else(|| Error::Parameter("ranking needs a non-empty test set".into()))?;
    let width = first.counts.len();
    if width == 0 || width % 2 != 0 {
        return Err(Error::Dimension(format!("feature length {width} is not 2k")));
    }
    let k = width / 2;
    let mut occ = [vec![0u64; width], vec![0u64; width]];
    let mut windows = [0u64; 2];
    for fv in features {
        if fv.counts.len() != width {
            return Err(Error::Dimension("feature vectors of different lengths".into()));
        }
        let y = fv.label.index();
        windows[y] += fv.counts[..k].iter().map(|&c| c as u64).sum::<u64>();
        for (o, &c) in occ[y].iter_mut().zip(&fv.counts) {
            *o += c as u64;
        }
    }
    if windows.contains(&0) {
        return Err(Error::Parameter("ranking needs test windows from both classes".into()));
    }
    (0..width)
        .map(|i| ContingencyTable::new(i, occ[0][i], occ[1][i], windows[0], windows[1]))
        .collect()
}

/// Master-codebook waveforms by descending χ², ties by index. A waveform
/// that never occurs, or occurs in every window, scores zero.
pub fn rank_waveforms(features: &[FeatureVector]) -> Result<Vec<RankedWaveform>> {
    let tables = contingency_tables(features)?;
    let k = tables.len() / 2;
    let mut ranked: Vec<RankedWaveform> = tables
        .into_iter()
        .map(|t| RankedWaveform {
            index: t.waveform_index,
            codebook: if t.waveform_index < k { Class::Interictal } else { Class::Preictal },
            centroid: t.waveform_index % k,
            chi2: chi2_statistic(&t).unwrap_or(0.0),
            table: t,
        })
        .collect();
    ranked.sort_by(|a, b| b.chi2.total_cmp(&a.chi2).then(a.index.cmp(&b.index)));
    Ok(ranked)
}
