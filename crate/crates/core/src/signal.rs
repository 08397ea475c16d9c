//! Segments, codebooks and the cosine distance everything else builds on.
//!
//! Layout conventions used throughout the crate:
//! - a [`Segment`] stores its samples as `M × C × L` (window, channel, sample);
//! - a [`FilteredSegment`] stores `M × L`;
//! - a [`Codebook`] stores one centroid per row, so its matrix is `k × P`.
//!
//! Centroid indices are zero-based in the API.

use std::fmt;

use ndarray::{Array2, Array3, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Segment class. Serialized as `0` (interictal) or `1` (preictal).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Class {
    Interictal,
    Preictal,
}

impl Class {
    pub const BOTH: [Class; 2] = [Class::Interictal, Class::Preictal];

    pub fn index(self) -> usize {
        match self {
            Class::Interictal => 0,
            Class::Preictal => 1,
        }
    }

    pub fn from_index(i: usize) -> Result<Class> {
        match i {
            0 => Ok(Class::Interictal),
            1 => Ok(Class::Preictal),
            other => Err(Error::Parameter(format!("class label must be 0 or 1, got {other}"))),
        }
    }

    pub fn is_positive(self) -> bool {
        self == Class::Preictal
    }
}

impl TryFrom<u8> for Class {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Class::from_index(v as usize)
    }
}

impl From<Class> for u8 {
    fn from(c: Class) -> u8 {
        c.index() as u8
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Class::Interictal => f.write_str("interictal"),
            Class::Preictal => f.write_str("preictal"),
        }
    }
}

/// One multichannel recording segment split into `M` windows of `L` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub id: String,
    /// `M × C × L`
    pub data: Array3<f64>,
    pub label: Class,
    pub fs: f64,
}

impl Segment {
    pub fn new(id: impl Into<String>, data: Array3<f64>, label: Class, fs: f64) -> Result<Segment> {
        let (m, c, l) = data.dim();
        if m == 0 || c == 0 || l == 0 {
            return Err(Error::Shape(format!("segment geometry must be positive, got {m}x{c}x{l}")));
        }
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::Parameter(format!("sampling rate must be positive, got {fs}")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("segment contains non-finite samples".into()));
        }
        Ok(Segment {
            id: id.into(),
            data,
            label,
            fs,
        })
    }

    pub fn n_windows(&self) -> usize {
        self.data.dim().0
    }

    pub fn n_channels(&self) -> usize {
        self.data.dim().1
    }

    pub fn window_len(&self) -> usize {
        self.data.dim().2
    }

    /// Continuous `C × (M·L)` view of the segment.
    pub fn continuous(&self) -> Array2<f64> {
        concat_windows(&self.data)
    }
}

/// A segment after projection through a spatial filter: `M × L`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSegment {
    pub data: Array2<f64>,
    pub source_id: String,
    pub filter_tag: Class,
}

/// `k` unit-norm centroids of length `P`, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    centroids: Array2<f64>,
    class_tag: Class,
}

impl Codebook {
    /// Builds a codebook, normalizing every row to unit Euclidean norm.
    pub fn new(mut centroids: Array2<f64>, class_tag: Class) -> Result<Codebook> {
        let (k, p) = centroids.dim();
        if k == 0 || p == 0 {
            return Err(Error::Shape(format!("codebook must be non-empty, got {k}x{p}")));
        }
        for (j, mut row) in centroids.axis_iter_mut(Axis(0)).enumerate() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::Numerical(format!("centroid {j} has zero or non-finite norm")));
            }
            row.mapv_inplace(|v| v / norm);
        }
        Ok(Codebook {
            centroids,
            class_tag,
        })
    }

    /// Same centroids under a different class tag.
    pub fn with_class(self, class_tag: Class) -> Codebook {
        Codebook {
            centroids: self.centroids,
            class_tag,
        }
    }

    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn p(&self) -> usize {
        self.centroids.ncols()
    }

    pub fn class_tag(&self) -> Class {
        self.class_tag
    }

    pub fn centroids(&self) -> ArrayView2<'_, f64> {
        self.centroids.view()
    }

    pub fn centroid(&self, j: usize) -> &[f64] {
        let p = self.p();
        let flat = self.centroids.as_slice().expect("codebook rows are contiguous");
        &flat[j * p..(j + 1) * p]
    }
}

#[derive(Serialize, Deserialize)]
struct CodebookRecord {
    class: Class,
    k: usize,
    p: usize,
    #[serde(with = "crate::io::b64::vec")]
    centroids: Vec<f64>,
}

impl Serialize for Codebook {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CodebookRecord {
            class: self.class_tag,
            k: self.k(),
            p: self.p(),
            centroids: self.centroids.iter().copied().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Codebook {
    /// Rows are kept bit-exact; they must already be unit-norm.
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Codebook, D::Error> {
        use serde::de::Error as _;
        let r = CodebookRecord::deserialize(d)?;
        if r.k == 0 || r.p == 0 {
            return Err(D::Error::custom("empty codebook"));
        }
        let centroids = Array2::from_shape_vec((r.k, r.p), r.centroids).map_err(D::Error::custom)?;
        for row in centroids.rows() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm.is_nan() || (norm - 1.0).abs() > 1e-9 {
                return Err(D::Error::custom(format!("centroid norm {norm} is not 1")));
            }
        }
        Ok(Codebook {
            centroids,
            class_tag: r.class,
        })
    }
}

/// Best (centroid, shift) match of one signal against a codebook.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub centroid: usize,
    pub shift: usize,
    pub distance: f64,
}

/// `1 − yᵀz / (‖y‖‖z‖)`, clamped to `[0, 2]`. A zero-norm argument gives 1.
pub fn cosine_distance(y: &[f64], z: &[f64]) -> Result<f64> {
    if y.len() != z.len() {
        return Err(Error::Dimension(format!(
            "cosine distance between lengths {} and {}",
            y.len(),
            z.len()
        )));
    }
    Ok(cosine_distance_raw(y, z))
}

#[inline]
pub(crate) fn cosine_distance_raw(y: &[f64], z: &[f64]) -> f64 {
    let mut yz = 0.0;
    let mut yy = 0.0;
    let mut zz = 0.0;
    for (&a, &b) in y.iter().zip(z) {
        yz += a * b;
        yy += a * a;
        zz += b * b;
    }
    let denom = (yy * zz).sqrt();
    if denom == 0.0 {
        return 1.0;
    }
    (1.0 - yz / denom).clamp(0.0, 2.0)
}

/// The `P`-sample window of `x` starting at `tau`.
pub fn extract_window(x: &[f64], tau: usize, p: usize) -> Result<&[f64]> {
    if p == 0 || p > x.len() || tau > x.len() - p {
        return Err(Error::Bounds(format!(
            "window of length {p} at shift {tau} does not fit a signal of length {}",
            x.len()
        )));
    }
    Ok(&x[tau..tau + p])
}

/// Reshapes a `C × (M·L)` recording into `M × C × L` non-overlapping windows.
pub fn split_into_windows(raw: ArrayView2<'_, f64>, l: usize) -> Result<Array3<f64>> {
    let (c, t) = raw.dim();
    if l == 0 || t == 0 || t % l != 0 {
        return Err(Error::Shape(format!(
            "{t} samples cannot be split into windows of length {l}"
        )));
    }
    let m = t / l;
    Ok(Array3::from_shape_fn((m, c, l), |(w, ch, s)| raw[[ch, w * l + s]]))
}

/// Inverse of [`split_into_windows`].
pub fn concat_windows(windows: &Array3<f64>) -> Array2<f64> {
    let (m, c, l) = windows.dim();
    Array2::from_shape_fn((c, m * l), |(ch, t)| windows[[t / l, ch, t % l]])
}
