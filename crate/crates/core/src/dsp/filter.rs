//! IIR design as cascaded second-order sections and zero-phase application.

use std::f64::consts::PI;

use ndarray::{Array2, ArrayView2, Axis};
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

/// Quality factor of the power-line notch.
pub const NOTCH_Q: f64 = 30.0;
pub const LINE_FREQ_HZ: f64 = 60.0;
/// Order of the Butterworth lowpass prototype behind [`butterworth_bandpass`].
pub const BANDPASS_ORDER: usize = 4;

/// One biquad `[b0, b1, b2, a1, a2]` with `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn response(&self, w: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        let num = self.b[0] + z1 * self.b[1] + z2 * self.b[2];
        let den = 1.0 + z1 * self.a[0] + z2 * self.a[1];
        num / den
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }
}

/// Cascade of biquads.
#[derive(Debug, Clone, PartialEq)]
pub struct Sos {
    pub sections: Vec<Biquad>,
}

impl Sos {
    /// Complex frequency response at normalized angular frequency `w` (rad/sample).
    pub fn response(&self, w: f64) -> Complex64 {
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(w))
    }

    /// Steady-state section states for a unit step input.
    fn step_zi(&self) -> Vec<[f64; 2]> {
        let mut scale = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let y = s.dc_gain() * scale;
                let zi = [y - s.b[0] * scale, s.b[2] * scale - s.a[1] * y];
                scale = y;
                zi
            })
            .collect()
    }

    /// Causal filtering in transposed direct form II.
    fn run(&self, x: &mut [f64], zi: &[[f64; 2]], x0: f64) {
        for (s, z) in self.sections.iter().zip(zi) {
            let mut z0 = z[0] * x0;
            let mut z1 = z[1] * x0;
            for v in x.iter_mut() {
                let xin = *v;
                let y = s.b[0] * xin + z0;
                z0 = s.b[1] * xin - s.a[0] * y + z1;
                z1 = s.b[2] * xin - s.a[1] * y;
                *v = y;
            }
        }
    }

    /// Forward-backward filtering with odd-extension padding.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = (3 * (2 * self.sections.len() + 1)).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let zi = self.step_zi();
        let x0 = ext[0];
        self.run(&mut ext, &zi, x0);
        ext.reverse();
        let x0 = ext[0];
        self.run(&mut ext, &zi, x0);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }

    /// Applies [`Sos::filtfilt`] to every row of a `C × T` matrix.
    pub fn filtfilt_rows(&self, signal: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros(signal.raw_dim());
        for (src, mut dst) in signal.axis_iter(Axis(0)).zip(out.axis_iter_mut(Axis(0))) {
            let row = self.filtfilt(&src.to_vec());
            dst.assign(&ndarray::ArrayView1::from(&row[..]));
        }
        out
    }
}

/// Second-order IIR notch at `f0` with quality factor `q`.
pub fn iir_notch(f0: f64, q: f64, fs: f64) -> Result<Sos> {
    if !(f0 > 0.0 && f0 < fs / 2.0) || q <= 0.0 {
        return Err(Error::Parameter(format!("notch at {f0} Hz (Q={q}) invalid for fs={fs}")));
    }
    let w0 = 2.0 * PI * f0 / fs;
    let bw = w0 / q;
    let gain = 1.0 / (1.0 + (bw / 2.0).tan());
    let c = w0.cos();
    Ok(Sos {
        sections: vec![Biquad {
            b: [gain, -2.0 * gain * c, gain],
            a: [-2.0 * gain * c, 2.0 * gain - 1.0],
        }],
    })
}

/// Digital Butterworth bandpass built from an `order`-pole lowpass prototype
/// (the resulting filter has `2·order` poles). Unit gain at the geometric
/// center frequency.
pub fn butterworth_bandpass(order: usize, lo_hz: f64, hi_hz: f64, fs: f64) -> Result<Sos> {
    if order == 0 || !(lo_hz > 0.0 && lo_hz < hi_hz && hi_hz < fs / 2.0) {
        return Err(Error::Parameter(format!(
            "bandpass [{lo_hz}, {hi_hz}] Hz of order {order} invalid for fs={fs}"
        )));
    }
    let fs2 = 2.0 * fs;
    let wl = fs2 * (PI * lo_hz / fs).tan();
    let wh = fs2 * (PI * hi_hz / fs).tan();
    let bw = wh - wl;
    let w0sq = wl * wh;

    let mut poles = Vec::with_capacity(2 * order);
    for k in 0..order {
        let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
        let p = Complex64::from_polar(1.0, theta) * (bw / 2.0);
        let disc = (p * p - w0sq).sqrt();
        for s in [p + disc, p - disc] {
            poles.push((fs2 + s) / (fs2 - s));
        }
    }

    let mut complex: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > 1e-12).collect();
    let mut real: Vec<f64> = poles.iter().filter(|p| p.im.abs() <= 1e-12).map(|p| p.re).collect();
    complex.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    real.sort_by(f64::total_cmp);
    if !real.len().is_multiple_of(2) || complex.len() + real.len() / 2 != order {
        return Err(Error::Numerical("could not pair bandpass poles into sections".into()));
    }

    let mut sections: Vec<Biquad> = complex
        .iter()
        .map(|p| Biquad {
            b: [1.0, 0.0, -1.0],
            a: [-2.0 * p.re, p.norm_sqr()],
        })
        .collect();
    sections.extend(real.chunks(2).map(|r| Biquad {
        b: [1.0, 0.0, -1.0],
        a: [-(r[0] + r[1]), r[0] * r[1]],
    }));

    let mut sos = Sos { sections };
    let wc = 2.0 * (w0sq.sqrt() / fs2).atan();
    let g = sos.response(wc).norm();
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::Numerical("degenerate bandpass gain".into()));
    }
    for v in sos.sections[0].b.iter_mut() {
        *v /= g;
    }
    Ok(sos)
}

/// Removes 60 Hz line noise from every channel of a `C × T` signal.
pub fn notch_60hz(signal: ArrayView2<'_, f64>, fs: f64) -> Result<Array2<f64>> {
    if fs <= 2.0 * LINE_FREQ_HZ {
        return Err(Error::Parameter(format!("notch needs fs > 120 Hz, got {fs}")));
    }
    Ok(iir_notch(LINE_FREQ_HZ, NOTCH_Q, fs)?.filtfilt_rows(signal))
}
