//! Seeded stratified train/test splits and k-fold partitions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::signal::Class;

/// splitmix64 finalizer; used to derive independent seeds from tuples.
pub fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut h = seed;
    for &p in parts {
        h ^= p.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = h.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

fn shuffled_by_class(labels: &[Class], seed: u64) -> [Vec<usize>; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, l) in labels.iter().enumerate() {
        by_class[l.index()].push(i);
    }
    for idx in &mut by_class {
        idx.shuffle(&mut rng);
    }
    by_class
}

/// Splits indices into `(train, test)` keeping the class ratio; `train_fraction`
/// of each class (rounded) goes to train. Both outputs are sorted.
pub fn stratified_split(labels: &[Class], train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!("split fraction {train_fraction} not in (0, 1)")));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, idx) in shuffled_by_class(labels, seed).into_iter().enumerate() {
        if idx.len() < 2 {
            return Err(Error::Stratification(format!(
                "class {class} has {} segments; need at least 2 to split",
                idx.len()
            )));
        }
        let n_train = ((idx.len() as f64 * train_fraction).round() as usize).clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Assigns each index to one of `k` validation folds, dealing each class
/// round-robin so every fold holds both classes. Returns the sorted
/// validation indices of each fold.
pub fn stratified_folds(labels: &[Class], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let mut folds = vec![Vec::new(); k];
    for (class, idx) in shuffled_by_class(labels, seed).into_iter().enumerate() {
        if idx.len() < k {
            return Err(Error::Stratification(format!(
                "class {class} has {} segments, fewer than {k} folds",
                idx.len()
            )));
        }
        for (j, i) in idx.into_iter().enumerate() {
            folds[j % k].push(i);
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}
