//! Rational-ratio polyphase resampling with a Kaiser-windowed sinc kernel.

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

pub const TARGET_FS: f64 = 512.0;
const KAISER_BETA: f64 = 5.0;
const MAX_RATE_FACTOR: u64 = 10_000;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Expresses `fs_out / fs_in` as a reduced fraction `up / down`. Rates are
/// accepted with up to three decimals.
pub fn rational_ratio(fs_in: f64, fs_out: f64) -> Result<(u64, u64)> {
    let to_milli = |f: f64| -> Result<u64> {
        let m = (f * 1000.0).round();
        if !(f > 0.0 && f.is_finite()) || (m - f * 1000.0).abs() > 1e-6 * m.max(1.0) {
            return Err(Error::Parameter(format!("unsupported sampling rate {f}")));
        }
        Ok(m as u64)
    };
    let (num, den) = (to_milli(fs_out)?, to_milli(fs_in)?);
    let g = gcd(num, den);
    let (up, down) = (num / g, den / g);
    if up.max(down) > MAX_RATE_FACTOR {
        return Err(Error::Parameter(format!(
            "resampling ratio {up}/{down} exceeds the supported denominator"
        )));
    }
    Ok((up, down))
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Lowpass FIR with cutoff `1/max(up, down)` of Nyquist, DC gain `up`.
fn design_kernel(up: u64, down: u64) -> Vec<f64> {
    let rate = up.max(down) as f64;
    let half = 10 * up.max(down) as usize;
    let n = 2 * half + 1;
    let cutoff = 1.0 / rate;
    let i0b = bessel_i0(KAISER_BETA);
    let mut h: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 - half as f64;
            let arg = std::f64::consts::PI * cutoff * t;
            let sinc = if t == 0.0 { 1.0 } else { arg.sin() / arg };
            let r = 2.0 * i as f64 / (n - 1) as f64 - 1.0;
            let w = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / i0b;
            cutoff * sinc * w
        })
        .collect();
    let s: f64 = h.iter().sum();
    for v in &mut h {
        *v *= up as f64 / s;
    }
    h
}

fn resample_row(x: &[f64], up: usize, down: usize, h: &[f64], n_out: usize) -> Vec<f64> {
    let half = (h.len() - 1) / 2;
    let n_up = x.len() * up;
    (0..n_out)
        .map(|m| {
            // centre of the kernel in the upsampled domain
            let centre = m * down + half;
            let lo = centre.saturating_sub(h.len() - 1);
            let hi = centre.min(n_up.saturating_sub(1));
            let mut first = lo.div_ceil(up) * up;
            let mut acc = 0.0;
            while first <= hi {
                acc += h[centre - first] * x[first / up];
                first += up;
            }
            acc
        })
        .collect()
}

/// Resamples each row of a `C × T` signal to `fs_out`. Output length is
/// `round(T · fs_out / fs_in)`.
pub fn resample(signal: ArrayView2<'_, f64>, fs_in: f64, fs_out: f64) -> Result<Array2<f64>> {
    let (up, down) = rational_ratio(fs_in, fs_out)?;
    if up == down {
        return Ok(signal.to_owned());
    }
    let (c, t) = signal.dim();
    let n_out = ((t as f64) * up as f64 / down as f64).round() as usize;
    let h = design_kernel(up, down);
    let mut out = Array2::zeros((c, n_out));
    for (src, mut dst) in signal.axis_iter(Axis(0)).zip(out.axis_iter_mut(Axis(0))) {
        let row = resample_row(&src.to_vec(), up as usize, down as usize, &h, n_out);
        dst.assign(&ndarray::ArrayView1::from(&row[..]));
    }
    Ok(out)
}

/// Resamples to 512 Hz, returning the new signal and its rate.
pub fn resample_512(signal: ArrayView2<'_, f64>, fs_in: f64) -> Result<(Array2<f64>, f64)> {
    Ok((resample(signal, fs_in, TARGET_FS)?, TARGET_FS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine_row(f: f64, fs: f64, n: usize) -> Array2<f64> {
        Array2::from_shape_fn((1, n), |(_, i)| (2.0 * PI * f * i as f64 / fs).sin())
    }

    fn max_err_mid(y: &Array2<f64>, f: f64, fs: f64, guard: usize) -> f64 {
        let n = y.ncols();
        (guard..n - guard)
            .map(|i| (y[[0, i]] - (2.0 * PI * f * i as f64 / fs).sin()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_at_target_rate() {
        let x = sine_row(7.0, 512.0, 300);
        let (y, fs) = resample_512(x.view(), 512.0).unwrap();
        assert_eq!(fs, 512.0);
        assert_eq!(y, x);
    }

    #[test]
    fn downsample_preserves_low_frequency_sine() {
        let x = sine_row(5.0, 1024.0, 4096);
        let (y, _) = resample_512(x.view(), 1024.0).unwrap();
        assert_eq!(y.ncols(), 2048);
        assert!(max_err_mid(&y, 5.0, 512.0, 64) < 0.02);
    }

    #[test]
    fn upsample_length_and_amplitude() {
        let x = sine_row(20.0, 256.0, 256);
        let (y, _) = resample_512(x.view(), 256.0).unwrap();
        assert_eq!(y.ncols(), 512);
        assert!(max_err_mid(&y, 20.0, 512.0, 64) < 0.02);
    }

    #[test]
    fn amplitude_preserved_up_to_forty_percent_of_rate() {
        for (fs_in, f) in [(1024.0, 0.4 * 512.0), (500.0, 0.4 * 500.0), (256.0, 0.4 * 256.0)] {
            let x = sine_row(f, fs_in, (fs_in as usize) * 4);
            let (y, _) = resample_512(x.view(), fs_in).unwrap();
            let err = max_err_mid(&y, f, 512.0, 200);
            assert!(err < 0.02, "fs_in={fs_in} f={f} err={err}");
        }
    }

    #[test]
    fn unsupported_rates() {
        assert!(rational_ratio(1.0 / 3.0, 512.0).is_err());
        assert!(rational_ratio(0.0, 512.0).is_err());
        assert!(rational_ratio(9999.999, 512.0).is_err());
        assert_eq!(rational_ratio(500.0, 512.0).unwrap(), (128, 125));
    }
}
