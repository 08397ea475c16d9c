use std::f64::consts::PI;

use ndarray::Array3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use sikwave::dsp::{select_band, SpectralBand};
use sikwave::{Class, Segment};

const FS: f64 = 512.0;

/// White noise on every channel; preictal segments add a rhythm at
/// `freq` Hz on the first two channels.
fn dataset(n: [usize; 2], m: usize, l: usize, freq: f64, amp: f64, seed: u64) -> Vec<Segment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for class in Class::BOTH {
        for i in 0..n[class.index()] {
            let mut data = Array3::from_shape_fn((m, 4, l), |_| StandardNormal.sample(&mut rng));
            if class == Class::Preictal {
                let phase = rng.random::<f64>() * 2.0 * PI;
                for w in 0..m {
                    for t in 0..l {
                        let v = amp * (2.0 * PI * freq * (w * l + t) as f64 / FS + phase).sin();
                        data[[w, 0, t]] += v;
                        data[[w, 1, t]] += v;
                    }
                }
            }
            out.push(Segment::new(format!("{class}_{i}"), data, class, FS).unwrap());
        }
    }
    out
}

#[test]
fn planted_theta_rhythm_selects_theta() {
    let segments = dataset([30, 30], 4, 512, 6.0, 0.5, 1);
    let refs: Vec<&Segment> = segments.iter().collect();
    let selection = select_band(&refs, &SpectralBand::ALL, 7).unwrap();
    assert_eq!(selection.band, SpectralBand::Theta, "{:?}", selection.scores);
    assert_eq!(selection.scores.len(), 9);
    let theta = selection.scores.iter().find(|s| s.band == SpectralBand::Theta).unwrap().pr_auc;
    for s in &selection.scores {
        assert!(s.band == SpectralBand::Theta || s.pr_auc < theta, "{:?}", selection.scores);
    }
    assert!(theta > 0.9);
}

#[test]
fn single_band_is_returned_unscored() {
    let segments = dataset([4, 4], 2, 128, 6.0, 0.5, 2);
    let refs: Vec<&Segment> = segments.iter().collect();
    let selection = select_band(&refs, &[SpectralBand::Hfo], 0).unwrap();
    assert_eq!(selection.band, SpectralBand::Hfo);
    assert!(select_band(&refs, &[], 0).is_err());
}

#[test]
fn shuffled_labels_score_near_prevalence() {
    let mut segments = dataset([300, 100], 2, 512, 6.0, 0.5, 3);
    let mut labels: Vec<Class> = segments.iter().map(|s| s.label).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(3));
    for (s, l) in segments.iter_mut().zip(labels) {
        s.label = l;
    }
    let refs: Vec<&Segment> = segments.iter().collect();
    let selection = select_band(&refs, &SpectralBand::ALL, 11).unwrap();
    let chosen = selection.scores.iter().find(|s| s.band == selection.band).unwrap().pr_auc;
    assert!((chosen - 0.25).abs() <= 0.15, "{:?}", selection.scores);
}
