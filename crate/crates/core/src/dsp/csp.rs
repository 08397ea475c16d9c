//! Common spatial patterns: one spatial filter per class from a generalized
//! eigenproblem on trace-normalized window covariances.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::band::SpectralBand;
use crate::error::{Error, Result};
use crate::signal::{Class, FilteredSegment, Segment};

/// Ridge added to the composite covariance, relative to its mean eigenvalue.
pub const COVARIANCE_RIDGE: f64 = 1e-6;

/// The interictal-maximizing filter `w0` and the preictal-maximizing `w1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CspPair {
    #[serde(with = "crate::io::b64::vec")]
    pub w0: Vec<f64>,
    #[serde(with = "crate::io::b64::vec")]
    pub w1: Vec<f64>,
    /// Generalized eigenvalues of `w0` and `w1` (fraction of composite
    /// energy carried by the preictal class).
    pub lambda0: f64,
    pub lambda1: f64,
    pub band: Option<SpectralBand>,
}

impl CspPair {
    pub fn n_channels(&self) -> usize {
        self.w0.len()
    }

    pub fn filter(&self, class: Class) -> &[f64] {
        match class {
            Class::Interictal => &self.w0,
            Class::Preictal => &self.w1,
        }
    }
}

fn mean_normalized_covariance(windows: &[ArrayView2<'_, f64>], c: usize) -> Result<DMatrix<f64>> {
    let mut acc = DMatrix::<f64>::zeros(c, c);
    let mut used = 0usize;
    for w in windows {
        if w.nrows() != c {
            return Err(Error::Dimension(format!(
                "window has {} channels, expected {c}",
                w.nrows()
            )));
        }
        let cov = w.dot(&w.t());
        let tr = cov.diag().sum();
        if tr.is_nan() || tr <= 0.0 {
            continue;
        }
        for i in 0..c {
            for j in 0..c {
                acc[(i, j)] += cov[[i, j]] / tr;
            }
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::Numerical("every window of a class has zero energy".into()));
    }
    Ok(acc / used as f64)
}

fn unit_with_sign(v: DVector<f64>) -> Vec<f64> {
    let n = v.norm();
    let mut out: Vec<f64> = v.iter().map(|x| x / n).collect();
    let pivot = out
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0f64), |best, (i, x)| if x.abs() > best.1.abs() { (i, x) } else { best });
    if pivot.1 < 0.0 {
        out.iter_mut().for_each(|x| *x = -*x);
    }
    out
}

/// Fits the CSP filter pair from `C × L` windows of each class.
pub fn csp_fit(windows0: &[ArrayView2<'_, f64>], windows1: &[ArrayView2<'_, f64>]) -> Result<CspPair> {
    if windows0.is_empty() || windows1.is_empty() {
        return Err(Error::Parameter("CSP needs windows from both classes".into()));
    }
    let c = windows0[0].nrows();
    if c == 0 {
        return Err(Error::Dimension("windows have no channels".into()));
    }
    let s0 = mean_normalized_covariance(windows0, c)?;
    let s1 = mean_normalized_covariance(windows1, c)?;
    let mut composite = &s0 + &s1;
    let ridge = COVARIANCE_RIDGE * composite.trace() / c as f64;
    for i in 0..c {
        composite[(i, i)] += ridge;
    }

    let eig = composite.symmetric_eigen();
    let max_ev = eig.eigenvalues.max();
    let min_ev = eig.eigenvalues.min();
    if min_ev.is_nan() || min_ev <= max_ev * 1e-14 || !max_ev.is_finite() {
        return Err(Error::Numerical("composite covariance is singular".into()));
    }
    // whitening P = D^{-1/2} Uᵀ
    let mut p = eig.eigenvectors.transpose();
    for (i, mut row) in p.row_iter_mut().enumerate() {
        row /= eig.eigenvalues[i].sqrt();
    }
    let whitened = &p * &s1 * p.transpose();
    let whitened = (&whitened + whitened.transpose()) * 0.5;
    let inner = whitened.symmetric_eigen();
    let (imin, imax) = inner.eigenvalues.iter().enumerate().fold(
        (0, 0),
        |(lo, hi), (i, &v)| {
            (
                if v < inner.eigenvalues[lo] { i } else { lo },
                if v > inner.eigenvalues[hi] { i } else { hi },
            )
        },
    );
    let pt = p.transpose();
    let w0 = unit_with_sign(&pt * inner.eigenvectors.column(imin));
    let w1 = unit_with_sign(&pt * inner.eigenvectors.column(imax));
    if w0.iter().chain(&w1).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("CSP produced non-finite filters".into()));
    }
    Ok(CspPair {
        w0,
        w1,
        lambda0: inner.eigenvalues[imin],
        lambda1: inner.eigenvalues[imax],
        band: None,
    })
}

/// Projects every window of a segment through `w`: `out[m, l] = Σ_c w_c x[m, c, l]`.
pub fn spatial_filter(segment: &Segment, w: &[f64], tag: Class) -> Result<FilteredSegment> {
    let (m, c, l) = segment.data.dim();
    if w.len() != c {
        return Err(Error::Dimension(format!(
            "spatial filter of length {} for a {c}-channel segment",
            w.len()
        )));
    }
    let mut out = Array2::zeros((m, l));
    for (win, mut dst) in segment.data.axis_iter(Axis(0)).zip(out.axis_iter_mut(Axis(0))) {
        for (ch, &wc) in win.axis_iter(Axis(0)).zip(w) {
            if wc != 0.0 {
                dst.scaled_add(wc, &ch);
            }
        }
    }
    Ok(FilteredSegment {
        data: out,
        source_id: segment.id.clone(),
        filter_tag: tag,
    })
}

/// Mean squared output of `w` over a `C × T` signal.
pub fn filtered_energy(signal: ArrayView2<'_, f64>, w: &[f64]) -> f64 {
    let t = signal.ncols();
    let mut e = 0.0;
    for i in 0..t {
        let v: f64 = signal.column(i).iter().zip(w).map(|(a, b)| a * b).sum();
        e += v * v;
    }
    e / t.max(1) as f64
}
