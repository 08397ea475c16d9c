//! Grid search over codebook size, centroid length and regularization by
//! stratified k-fold cross-validation on the training segments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bowav::{featurize_all, learn_codebooks, FeatureVector};
use crate::classify::{ClassifierKind, TrainedClassifier};
use crate::dsp::{fit_csp, CspPair, SpectralBand};
use crate::error::{Error, Result};
use crate::metrics::{mcc, ConfusionCounts};
use crate::partition::{mix_seed, stratified_folds};
use crate::signal::{Class, Segment};
use crate::sikmeans::SikmeansConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvGrid {
    pub ks: Vec<usize>,
    pub ps: Vec<usize>,
    pub reg_cs: Vec<f64>,
    pub folds: usize,
}

impl CvGrid {
    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty() || self.ps.is_empty() || self.reg_cs.is_empty() {
            return Err(Error::Config("cross-validation grid lists must be non-empty".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.ks.contains(&0) || self.ps.contains(&0) {
            return Err(Error::Config("grid k and P values must be positive".into()));
        }
        if let Some(c) = self.reg_cs.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::Config(format!("regularization C must be positive, got {c}")));
        }
        Ok(())
    }
}

/// How codebooks and spatial filters are learned inside each fold.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CvOptions {
    /// Band for CSP fitting; `None` fits on the unfiltered windows.
    pub band: Option<SpectralBand>,
    /// Clustering settings; `k`, `p` and `seed` are overridden per job.
    pub sikmeans: SikmeansConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub k: usize,
    pub p: usize,
    /// Absent for classifiers without a regularization parameter.
    pub reg_c: Option<f64>,
    pub fold_mcc: Vec<f64>,
    pub mean_mcc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub classifier: ClassifierKind,
    pub best: CvCell,
    /// Every grid cell in grid order.
    pub cells: Vec<CvCell>,
}

/// Seed for the codebooks of one `(k, P, fold)` job.
pub fn job_seed(seed: u64, k: usize, p: usize, fold: usize) -> u64 {
    mix_seed(seed, &[k as u64, p as u64, fold as u64])
}

/// Cross-validates one classifier with default clustering settings.
pub fn cross_validate(segments: &[&Segment], grid: &CvGrid, classifier: ClassifierKind, seed: u64) -> Result<CvResult> {
    let mut r = cross_validate_many(segments, grid, &[classifier], &CvOptions::default(), seed)?;
    Ok(r.remove(0))
}

struct FoldFeatures {
    train: Vec<FeatureVector>,
    val: Vec<FeatureVector>,
}

fn fold_mcc(kind: ClassifierKind, f: &FoldFeatures, reg_c: f64) -> Result<f64> {
    let model = TrainedClassifier::fit(kind, &f.train, reg_c)?;
    let predicted = model.predict_all(&f.val)?;
    let truth: Vec<Class> = f.val.iter().map(|v| v.label).collect();
    mcc(&ConfusionCounts::from_predictions(&truth, &predicted)?)
}

/// Cross-validates several classifiers over one grid. Codebooks depend only
/// on `(k, P, fold)`, so they are learned once and shared by every
/// classifier and regularization value.
pub fn cross_validate_many(
    segments: &[&Segment],
    grid: &CvGrid,
    classifiers: &[ClassifierKind],
    options: &CvOptions,
    seed: u64,
) -> Result<Vec<CvResult>> {
    grid.validate()?;
    if classifiers.is_empty() {
        return Err(Error::Config("no classifiers to cross-validate".into()));
    }
    let labels: Vec<Class> = segments.iter().map(|s| s.label).collect();
    let folds = stratified_folds(&labels, grid.folds, mix_seed(seed, &[0xF01D]))?;
    let mut in_fold = vec![0usize; segments.len()];
    for (f, idx) in folds.iter().enumerate() {
        for &i in idx {
            in_fold[i] = f;
        }
    }
    let split = |f: usize| -> (Vec<&Segment>, Vec<&Segment>) {
        let (val, train): (Vec<_>, Vec<_>) = segments.iter().enumerate().partition(|(i, _)| in_fold[*i] == f);
        (train.into_iter().map(|(_, s)| *s).collect(), val.into_iter().map(|(_, s)| *s).collect())
    };

    let csps: Vec<CspPair> = (0..grid.folds)
        .into_par_iter()
        .map(|f| fit_csp(&split(f).0, options.band))
        .collect::<Result<_>>()?;

    let mut jobs = Vec::new();
    for &k in &grid.ks {
        for &p in &grid.ps {
            for f in 0..grid.folds {
                jobs.push((k, p, f));
            }
        }
    }
    let features: Vec<FoldFeatures> = jobs
        .par_iter()
        .map(|&(k, p, f)| {
            let (train, val) = split(f);
            let cfg = SikmeansConfig {
                k,
                p,
                seed: job_seed(seed, k, p, f),
                ..options.sikmeans.clone()
            };
            let (cb0, cb1) = learn_codebooks(&train, &csps[f], &cfg)?;
            log::debug!("cv job k={k} P={p} fold={f}: codebooks learned");
            Ok(FoldFeatures {
                train: featurize_all(&train, &csps[f], &cb0, &cb1, cfg.backend)?,
                val: featurize_all(&val, &csps[f], &cb0, &cb1, cfg.backend)?,
            })
        })
        .collect::<Result<_>>()?;

    let mut results = Vec::with_capacity(classifiers.len());
    for &kind in classifiers {
        let reg_cs: Vec<Option<f64>> = if kind.uses_reg_c() {
            grid.reg_cs.iter().map(|&c| Some(c)).collect()
        } else {
            vec![None]
        };
        let mut cells = Vec::new();
        for (ki, &k) in grid.ks.iter().enumerate() {
            for (pi, &p) in grid.ps.iter().enumerate() {
                for &reg_c in &reg_cs {
                    let base = (ki * grid.ps.len() + pi) * grid.folds;
                    let fold_mcc = (0..grid.folds)
                        .into_par_iter()
                        .map(|f| fold_mcc(kind, &features[base + f], reg_c.unwrap_or(1.0)))
                        .collect::<Result<Vec<f64>>>()?;
                    let mean_mcc = fold_mcc.iter().sum::<f64>() / grid.folds as f64;
                    log::info!("cv {} k={k} P={p} C={reg_c:?}: mean MCC {mean_mcc:.4}", kind.name());
                    cells.push(CvCell { k, p, reg_c, fold_mcc, mean_mcc });
                }
            }
        }
        let mut best = 0;
        for (i, c) in cells.iter().enumerate() {
            if c.mean_mcc > cells[best].mean_mcc {
                best = i;
            }
        }
        results.push(CvResult {
            classifier: kind,
            best: cells[best].clone(),
            cells,
        });
    }
    Ok(results)
}
