//! Assignment step: best (centroid, shift) for each signal.
//!
//! The naive path evaluates every window directly and is the reference.
//! The FFT path gets every numerator `T_P(x, τ)ᵀ c` from one circular
//! cross-correlation per centroid pair and every window norm from prefix
//! sums of `x²`; candidates within [`SCREEN_TOLERANCE`] of the best screened
//! distance are then re-evaluated exactly, so both paths return the same
//! assignment and the same distance.

use std::sync::Arc;

use ndarray::ArrayView2;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{cosine_distance_raw, Assignment, Codebook};

/// Screening slack on FFT distances before exact re-evaluation.
pub const SCREEN_TOLERANCE: f64 = 1e-9;
/// Windows whose energy is below this fraction of the signal's largest
/// window energy are evaluated exactly rather than through prefix sums.
const LOW_ENERGY_FRACTION: f64 = 1e-8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Naive,
    #[default]
    Fft,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Backend::Naive),
            "fft" => Ok(Backend::Fft),
            other => Err(Error::Parameter(format!("unknown backend '{other}'"))),
        }
    }
}

struct FftPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// conj(FFT(c_{2j} + i·c_{2j+1})) for each centroid pair
    spectra: Vec<Vec<Complex64>>,
    centroid_energy: Vec<f64>,
}

/// A codebook prepared for repeated assignment of length-`L` signals.
pub struct Assigner<'a> {
    codebook: &'a Codebook,
    len: usize,
    fft: Option<FftPlan>,
}

impl<'a> Assigner<'a> {
    pub fn new(codebook: &'a Codebook, len: usize, backend: Backend) -> Result<Assigner<'a>> {
        let p = codebook.p();
        if p > len {
            return Err(Error::Dimension(format!(
                "centroid length {p} exceeds signal length {len}"
            )));
        }
        let fft = match backend {
            Backend::Naive => None,
            Backend::Fft => Some(Self::plan(codebook, len)),
        };
        Ok(Assigner { codebook, len, fft })
    }

    fn plan(codebook: &Codebook, n: usize) -> FftPlan {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let (k, p) = (codebook.k(), codebook.p());
        let spectra = (0..k)
            .step_by(2)
            .map(|j| {
                let mut buf = vec![Complex64::new(0.0, 0.0); n];
                let a = codebook.centroid(j);
                let b = (j + 1 < k).then(|| codebook.centroid(j + 1));
                for t in 0..p {
                    buf[t] = Complex64::new(a[t], b.map_or(0.0, |b| b[t]));
                }
                forward.process(&mut buf);
                buf.iter_mut().for_each(|v| *v = v.conj());
                buf
            })
            .collect();
        let centroid_energy = (0..k)
            .map(|j| codebook.centroid(j).iter().map(|v| v * v).sum())
            .collect();
        FftPlan {
            forward,
            inverse,
            spectra,
            centroid_energy,
        }
    }

    pub fn assign(&self, x: &[f64]) -> Result<Assignment> {
        if x.len() != self.len {
            return Err(Error::Dimension(format!(
                "signal of length {} given to an assigner for length {}",
                x.len(),
                self.len
            )));
        }
        Ok(match &self.fft {
            None => assign_naive(x, self.codebook),
            Some(plan) => self.assign_fft(x, plan),
        })
    }

    fn assign_fft(&self, x: &[f64], plan: &FftPlan) -> Assignment {
        let cb = self.codebook;
        let (k, p, n) = (cb.k(), cb.p(), self.len);
        let shifts = n - p + 1;

        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for v in x {
            acc += v * v;
            prefix.push(acc);
        }
        let energy: Vec<f64> = (0..shifts).map(|t| (prefix[t + p] - prefix[t]).max(0.0)).collect();
        let floor = energy.iter().copied().fold(0.0, f64::max) * LOW_ENERGY_FRACTION;

        let mut spectrum: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        plan.forward.process(&mut spectrum);

        let scale = 1.0 / n as f64;
        let mut screened = vec![0.0; k * shifts];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (pair, g) in plan.spectra.iter().enumerate() {
            for ((b, s), g) in buf.iter_mut().zip(&spectrum).zip(g) {
                *b = s * g;
            }
            plan.inverse.process(&mut buf);
            for j in [2 * pair, 2 * pair + 1] {
                if j >= k {
                    break;
                }
                let cc = plan.centroid_energy[j];
                let row = &mut screened[j * shifts..(j + 1) * shifts];
                for (t, d) in row.iter_mut().enumerate() {
                    let num = if j % 2 == 0 { buf[t].re } else { -buf[t].im } * scale;
                    *d = if energy[t] <= floor {
                        cosine_distance_raw(&x[t..t + p], cb.centroid(j))
                    } else {
                        (1.0 - num / (energy[t] * cc).sqrt()).clamp(0.0, 2.0)
                    };
                }
            }
        }

        let best = screened.iter().copied().fold(f64::INFINITY, f64::min);
        let cutoff = best + SCREEN_TOLERANCE;
        let mut out = Assignment {
            centroid: 0,
            shift: 0,
            distance: f64::INFINITY,
        };
        for (idx, &d) in screened.iter().enumerate() {
            if d > cutoff {
                continue;
            }
            let (j, t) = (idx / shifts, idx % shifts);
            let exact = cosine_distance_raw(&x[t..t + p], cb.centroid(j));
            if exact < out.distance {
                out = Assignment {
                    centroid: j,
                    shift: t,
                    distance: exact,
                };
            }
        }
        out
    }
}

fn assign_naive(x: &[f64], codebook: &Codebook) -> Assignment {
    let p = codebook.p();
    let mut out = Assignment {
        centroid: 0,
        shift: 0,
        distance: f64::INFINITY,
    };
    for j in 0..codebook.k() {
        let c = codebook.centroid(j);
        for t in 0..=x.len() - p {
            let d = cosine_distance_raw(&x[t..t + p], c);
            if d < out.distance {
                out = Assignment {
                    centroid: j,
                    shift: t,
                    distance: d,
                };
            }
        }
    }
    out
}

/// Exhaustive assignment of a single signal (reference path).
pub fn assign_one(x: &[f64], codebook: &Codebook) -> Result<Assignment> {
    Assigner::new(codebook, x.len(), Backend::Naive)?.assign(x)
}

/// Assigns every row of an `N × L` matrix, in order.
pub fn assign_batch(signals: ArrayView2<'_, f64>, codebook: &Codebook, backend: Backend) -> Result<Vec<Assignment>> {
    let signals = signals.as_standard_layout();
    let assigner = Assigner::new(codebook, signals.ncols(), backend)?;
    let flat = signals.as_slice().expect("standard layout");
    let l = signals.ncols().max(1);
    flat.par_chunks(l)
        .take(signals.nrows())
        .map(|row| assigner.assign(row))
        .collect()
}
