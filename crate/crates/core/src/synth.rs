//! Seeded synthetic datasets with planted class-specific waveforms.

use std::f64::consts::PI;

use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::mix_seed;
use crate::signal::{Class, Codebook, Segment};

/// Length of the default templates.
pub const DEFAULT_TEMPLATE_LEN: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Segments per class, `[interictal, preictal]`.
    pub n_segments: [usize; 2],
    pub m: usize,
    pub c: usize,
    pub l: usize,
    pub fs: f64,
    /// Per-class template banks; every template has the same length.
    pub waveform_bank: [Vec<Vec<f64>>; 2],
    /// Event-to-noise power ratio on the projected channel; `inf` disables noise.
    pub snr_db: f64,
    /// Per-class unit-norm mixing vectors of length `c`.
    pub spatial_patterns: [Vec<f64>; 2],
    pub occurrence_rate: f64,
    /// Event amplitudes are drawn uniformly from this range.
    pub amplitude_range: (f64, f64),
    /// Lag-one autocorrelation of the background noise on each channel;
    /// 0 gives white noise. The noise variance does not depend on it.
    pub noise_ar: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let c = 4;
        SynthConfig {
            n_segments: [200, 60],
            m: 60,
            c,
            l: 512,
            fs: 512.0,
            waveform_bank: default_banks(DEFAULT_TEMPLATE_LEN),
            snr_db: 10.0,
            spatial_patterns: default_spatial_patterns(c),
            occurrence_rate: 0.8,
            amplitude_range: (0.8, 1.2),
            noise_ar: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Template length shared by both banks.
    pub fn template_len(&self) -> usize {
        self.waveform_bank[0].first().map_or(0, |t| t.len())
    }

    /// Noise standard deviation per channel.
    pub fn noise_sigma(&self) -> f64 {
        if self.snr_db == f64::INFINITY {
            return 0.0;
        }
        let (lo, hi) = self.amplitude_range;
        let amp = 0.5 * (lo + hi);
        let event_power = amp * amp / self.template_len() as f64;
        (event_power / 10f64.powf(self.snr_db / 10.0)).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.c == 0 || self.l == 0 || self.n_segments.contains(&0) {
            return Err(Error::Config("synthetic geometry and segment counts must be positive".into()));
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(Error::Config(format!("sampling rate must be positive, got {}", self.fs)));
        }
        let p = self.template_len();
        if p == 0 {
            return Err(Error::Config("empty waveform bank".into()));
        }
        if p > self.l {
            return Err(Error::Parameter(format!("template length {p} exceeds window length {}", self.l)));
        }
        for bank in &self.waveform_bank {
            if bank.is_empty() {
                return Err(Error::Config("each class needs at least one template".into()));
            }
            for t in bank {
                if t.len() != p {
                    return Err(Error::Config("templates must share one length".into()));
                }
                if (norm(t) - 1.0).abs() > 1e-9 {
                    return Err(Error::Config("templates must be unit-norm".into()));
                }
            }
        }
        for a in &self.spatial_patterns {
            if a.len() != self.c || (norm(a) - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("spatial patterns must be unit vectors of length {}", self.c)));
            }
        }
        if !(0.0..=1.0).contains(&self.occurrence_rate) {
            return Err(Error::Config(format!("occurrence rate {} not in [0, 1]", self.occurrence_rate)));
        }
        let (lo, hi) = self.amplitude_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::Config("amplitude range must satisfy 0 < lo <= hi".into()));
        }
        if !(0.0..1.0).contains(&self.noise_ar) {
            return Err(Error::Config(format!("noise_ar {} not in [0, 1)", self.noise_ar)));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::Config("snr_db must be a number or +inf".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedEvent {
    pub template: usize,
    pub shift: usize,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub segment_ids: Vec<String>,
    /// `events[s][w]` is the event planted in window `w` of segment `s`.
    pub events: Vec<Vec<Option<PlantedEvent>>>,
    pub templates: [Vec<Vec<f64>>; 2],
    pub spatial_patterns: [Vec<f64>; 2],
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

fn shape(p: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    unit((0..p).map(|i| f((i as f64 + 0.5) / p as f64)).collect())
}

fn hann(t: f64) -> f64 {
    (PI * t).sin().powi(2)
}

fn gauss(t: f64, mu: f64, s: f64) -> f64 {
    (-0.5 * ((t - mu) / s).powi(2)).exp()
}

/// Four distinct non-sinusoidal shapes per class, each unit-norm.
pub fn default_banks(p: usize) -> [Vec<Vec<f64>>; 2] {
    let saw = |x: f64| 2.0 * (x - x.floor()) - 1.0;
    let class0 = vec![
        shape(p, |t| saw(3.0 * t) * hann(t)),
        shape(p, |t| (2.0 * PI * 4.0 * (t - 0.5)).cos() * gauss(t, 0.5, 0.18)),
        shape(p, |t| -(t - 0.4) * gauss(t, 0.4, 0.06)),
        shape(p, |t| (2.0 * PI * 2.0 * t).sin().signum() * hann(t).sqrt()),
    ];
    let class1 = vec![
        shape(p, |t| saw(-2.0 * t) * hann(t)),
        shape(p, |t| (2.0 * PI * 6.0 * (t - 0.5)).sin() * gauss(t, 0.5, 0.15)),
        shape(p, |t| {
            let u = (t - 0.5) / 0.08;
            (1.0 - u * u) * (-0.5 * u * u).exp()
        }),
        shape(p, |t| {
            let pulse = if (3.0 * t).fract() < 0.3 { 1.0 } else { -0.43 };
            pulse * hann(t).sqrt()
        }),
    ];
    [class0, class1]
}

/// Gaussian bumps over the channel axis at one and two thirds of the array.
pub fn default_spatial_patterns(c: usize) -> [Vec<f64>; 2] {
    if c == 1 {
        return [vec![1.0], vec![1.0]];
    }
    let span = (c - 1) as f64;
    let bump = |mu: f64| unit((0..c).map(|i| gauss(i as f64, mu, 0.7 * span / 3.0)).collect());
    [bump(span / 3.0), bump(2.0 * span / 3.0)]
}

/// Generates `n_segments[0]` interictal then `n_segments[1]` preictal
/// segments. Each segment draws from its own seed derived from `cfg.seed`.
pub fn make_dataset(cfg: &SynthConfig) -> Result<(Vec<Segment>, GroundTruth)> {
    cfg.validate()?;
    let p = cfg.template_len();
    let sigma = cfg.noise_sigma();
    let jobs: Vec<(Class, usize)> = Class::BOTH
        .iter()
        .flat_map(|&y| (0..cfg.n_segments[y.index()]).map(move |i| (y, i)))
        .collect();
    let generated: Vec<(Segment, Vec<Option<PlantedEvent>>)> = jobs
        .par_iter()
        .map(|&(class, i)| {
            let y = class.index();
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, &[y as u64, i as u64]));
            let noise = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
            let bank = &cfg.waveform_bank[y];
            let pattern = &cfg.spatial_patterns[y];
            let mut data = Array3::<f64>::zeros((cfg.m, cfg.c, cfg.l));
            if sigma > 0.0 {
                let rho = cfg.noise_ar;
                let innovation = (1.0 - rho * rho).sqrt();
                for ch in 0..cfg.c {
                    let mut prev = noise.sample(&mut rng);
                    for w in 0..cfg.m {
                        for t in 0..cfg.l {
                            let v = rho * prev + innovation * noise.sample(&mut rng);
                            data[[w, ch, t]] = v;
                            prev = v;
                        }
                    }
                }
            }
            let mut events = Vec::with_capacity(cfg.m);
            for w in 0..cfg.m {
                let event = if rng.random::<f64>() < cfg.occurrence_rate {
                    let (lo, hi) = cfg.amplitude_range;
                    Some(PlantedEvent {
                        template: rng.random_range(0..bank.len()),
                        shift: rng.random_range(0..=cfg.l - p),
                        amplitude: lo + (hi - lo) * rng.random::<f64>(),
                    })
                } else {
                    None
                };
                if let Some(e) = event {
                    for (ch, &a) in pattern.iter().enumerate() {
                        for (j, &v) in bank[e.template].iter().enumerate() {
                            data[[w, ch, e.shift + j]] += e.amplitude * a * v;
                        }
                    }
                }
                events.push(event);
            }
            let prefix = if class == Class::Interictal { "inter" } else { "pre" };
            Ok((Segment::new(format!("{prefix}_{i:04}"), data, class, cfg.fs)?, events))
        })
        .collect::<Result<_>>()?;

    let mut segments = Vec::with_capacity(generated.len());
    let mut truth = GroundTruth {
        segment_ids: Vec::with_capacity(generated.len()),
        events: Vec::with_capacity(generated.len()),
        templates: cfg.waveform_bank.clone(),
        spatial_patterns: cfg.spatial_patterns.clone(),
    };
    for (s, e) in generated {
        truth.segment_ids.push(s.id.clone());
        truth.events.push(e);
        segments.push(s);
    }
    Ok((segments, truth))
}

/// Best absolute cosine similarity between two vectors over every relative
/// lag, treating samples outside either vector as zero.
pub fn aligned_similarity(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let mut best = 0.0f64;
    for lag in -(b.len() as isize - 1)..a.len() as isize {
        let mut dot = 0.0;
        for (j, &bv) in b.iter().enumerate() {
            let i = lag + j as isize;
            if i >= 0 && (i as usize) < a.len() {
                dot += a[i as usize] * bv;
            }
        }
        best = best.max(dot.abs());
    }
    best / (na * nb)
}

/// For each truth template, the best shift- and sign-invariant cosine
/// similarity to any learned centroid.
pub fn recovery_score(learned: &Codebook, truth: &[Vec<f64>]) -> Result<Vec<f64>> {
    if learned.k() == 0 {
        return Err(Error::Parameter("empty codebook".into()));
    }
    Ok(truth
        .iter()
        .map(|t| {
            (0..learned.k())
                .map(|j| aligned_similarity(learned.centroid(j), t))
                .fold(0.0, f64::max)
        })
        .collect())
}
