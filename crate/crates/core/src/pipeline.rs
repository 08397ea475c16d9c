//! End-to-end experiment: split, band selection, cross-validation, final
//! codebooks and classifiers, test metrics and χ² ranking.
//!
//! Every step is a stage function whose output is also an on-disk artifact,
//! so running the stages one at a time gives the same report as
//! [`run_pipeline`].

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::s;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bowav::{featurize_all, learn_codebooks, FeatureVector};
use crate::classify::{ClassifierKind, TrainedClassifier};
use crate::cv::{cross_validate_many, CvGrid, CvOptions, CvResult};
use crate::dsp::{fit_csp, preprocess, select_band, BandSelection, CspPair, SpectralBand};
use crate::error::{Error, Result, StageExt};
use crate::io::{self, read_artifact, write_artifact, FORMAT_VERSION};
use crate::metrics::{mcc, precision_recall, ConfusionCounts};
use crate::partition::{mix_seed, stratified_split};
use crate::ranking::{rank_waveforms, RankedWaveform};
use crate::signal::{split_into_windows, Class, Codebook, Segment};
use crate::sikmeans::{Backend, CentroidUpdate, SikmeansConfig};

pub const BAND_FILE: &str = "band.json";
pub const CV_FILE: &str = "cv.json";
pub const CODEBOOK_FILE: &str = "codebooks.json";
pub const FEATURE_FILE: &str = "features.json";
pub const MODEL_FILE: &str = "models.json";
pub const EVAL_FILE: &str = "evaluation.json";
pub const RANK_FILE: &str = "ranking.json";
pub const REPORT_FILE: &str = "report.json";
pub const REPORT_TEXT_FILE: &str = "report.txt";

const SEED_SPLIT: u64 = 1;
const SEED_BAND: u64 = 2;
const SEED_CV: u64 = 3;
const SEED_FINAL: u64 = 4;

/// Clustering settings shared by every codebook the experiment learns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSettings {
    pub max_iter: usize,
    pub n_init: usize,
    pub backend: Backend,
    pub update: CentroidUpdate,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        let d = SikmeansConfig::default();
        ClusterSettings {
            max_iter: d.max_iter,
            n_init: d.n_init,
            backend: d.backend,
            update: d.update,
        }
    }
}

impl ClusterSettings {
    fn config(&self, k: usize, p: usize, seed: u64) -> SikmeansConfig {
        SikmeansConfig {
            k,
            p,
            max_iter: self.max_iter,
            n_init: self.n_init,
            seed,
            backend: self.backend,
            update: self.update,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Candidate CSP bands; a single entry fixes the band.
    pub bands: Vec<SpectralBand>,
    pub grid: CvGrid,
    pub classifiers: Vec<ClassifierKind>,
    pub seed: u64,
    /// Fraction of each class used for training.
    pub split_fraction: f64,
    /// Notch filtering and resampling to 512 Hz before anything else.
    pub preprocess: bool,
    pub sikmeans: ClusterSettings,
    /// Where results go; not part of the config hash.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            bands: SpectralBand::ALL.to_vec(),
            grid: CvGrid {
                ks: vec![4, 8, 16, 32, 64, 128],
                ps: vec![30, 40, 60, 120, 200, 350],
                reg_cs: vec![0.5, 1.0, 2.0],
                folds: 10,
            },
            classifiers: vec![ClassifierKind::Logreg, ClassifierKind::Nb],
            seed: 0,
            split_fraction: 0.8,
            preprocess: true,
            sikmeans: ClusterSettings::default(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingArtifact(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let cfg: ExperimentConfig =
            serde_json::from_slice(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bands.is_empty() {
            return Err(Error::Config("band list is empty".into()));
        }
        if self.classifiers.is_empty() {
            return Err(Error::Config("no classifiers configured".into()));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Config(format!("split fraction {} not in (0, 1)", self.split_fraction)));
        }
        if self.sikmeans.max_iter == 0 || self.sikmeans.n_init == 0 {
            return Err(Error::Config("max_iter and n_init must be at least 1".into()));
        }
        self.grid.validate()
    }

    /// SHA-256 of the config with run-time-only fields cleared.
    pub fn hash(&self) -> Result<String> {
        io::json_hash(&ExperimentConfig {
            output_dir: None,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_segments: usize,
    pub n_interictal: usize,
    pub n_preictal: usize,
    /// Sampling rate after preprocessing.
    pub fs: f64,
    pub m: usize,
    pub c: usize,
    pub l: usize,
}

/// A loaded, preprocessed dataset under one config.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub segments: Vec<Segment>,
    pub summary: DatasetSummary,
    index: HashMap<String, usize>,
}

fn preprocess_segment(seg: Segment) -> Result<Segment> {
    let m = seg.n_windows();
    let (x, fs) = preprocess(seg.continuous().view(), seg.fs)?;
    let l = x.ncols() / m;
    if l == 0 {
        return Err(Error::Shape(format!("segment {} is too short to resample", seg.id)));
    }
    let windows = split_into_windows(x.slice(s![.., ..m * l]), l)?;
    Segment::new(seg.id, windows, seg.label, fs)
}

impl Experiment {
    pub fn new(config: ExperimentConfig, segments: Vec<Segment>) -> Result<Experiment> {
        config.validate()?;
        let config_hash = config.hash()?;
        let segments: Vec<Segment> = if config.preprocess {
            segments.into_par_iter().map(preprocess_segment).collect::<Result<_>>()?
        } else {
            segments
        };
        let first = segments
            .first()
            .ok_or_else(|| Error::Parameter("empty dataset".into()))?;
        let (m, c, l) = first.data.dim();
        let mut index = HashMap::with_capacity(segments.len());
        for (i, s) in segments.iter().enumerate() {
            if s.data.dim() != (m, c, l) {
                return Err(Error::Shape(format!("segment {} differs in geometry", s.id)));
            }
            if index.insert(s.id.clone(), i).is_some() {
                return Err(Error::Format(format!("duplicate segment id {}", s.id)));
            }
        }
        let n_preictal = segments.iter().filter(|s| s.label == Class::Preictal).count();
        let summary = DatasetSummary {
            n_segments: segments.len(),
            n_interictal: segments.len() - n_preictal,
            n_preictal,
            fs: first.fs,
            m,
            c,
            l,
        };
        Ok(Experiment {
            config,
            config_hash,
            segments,
            summary,
            index,
        })
    }

    pub fn load(config: ExperimentConfig, manifest: &Path) -> Result<Experiment> {
        let (_, segments) = io::load_dataset(manifest).stage("load")?;
        Experiment::new(config, segments).stage("load")
    }

    fn select(&self, ids: &[String]) -> Result<Vec<&Segment>> {
        ids.iter()
            .map(|id| {
                self.index
                    .get(id)
                    .map(|&i| &self.segments[i])
                    .ok_or_else(|| Error::Format(format!("artifact refers to unknown segment {id}")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandArtifact {
    pub dataset: DatasetSummary,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub selection: BandSelection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvArtifact {
    pub results: Vec<CvResult>,
}

/// Hyperparameters a classifier is finally trained with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub classifier: ClassifierKind,
    pub k: usize,
    pub p: usize,
    pub reg_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookSet {
    pub k: usize,
    pub p: usize,
    pub interictal: Codebook,
    pub preictal: Codebook,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookArtifact {
    pub csp: CspPair,
    pub selections: Vec<Selection>,
    pub sets: Vec<CodebookSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub k: usize,
    pub p: usize,
    pub train: Vec<FeatureVector>,
    pub test: Vec<FeatureVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureArtifact {
    pub sets: Vec<FeatureSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub selection: Selection,
    pub model: TrainedClassifier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub models: Vec<FittedModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub selection: Selection,
    pub counts: ConfusionCounts,
    pub mcc: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalArtifact {
    pub results: Vec<TestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub k: usize,
    pub p: usize,
    pub waveforms: Vec<RankedWaveform>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankArtifact {
    pub rankings: Vec<Ranking>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub n_train: usize,
    pub n_test: usize,
    pub band: BandSelection,
    pub cv: Vec<CvResult>,
    pub test: Vec<TestResult>,
    pub rankings: Vec<Ranking>,
}

impl Report {
    /// Ranking of the codebooks a classifier was evaluated with.
    pub fn ranking_for(&self, classifier: ClassifierKind) -> Option<&Ranking> {
        let sel = self.test.iter().find(|t| t.selection.classifier == classifier)?.selection;
        self.rankings.iter().find(|r| r.k == sel.k && r.p == sel.p)
    }

    /// Plain-text summary of the report.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "config {}  seed {}", self.config_hash, self.seed);
        let _ = writeln!(
            out,
            "segments {} ({} interictal, {} preictal); train {}, test {}",
            self.dataset.n_segments, self.dataset.n_interictal, self.dataset.n_preictal, self.n_train, self.n_test
        );
        let _ = writeln!(out, "band {}", self.band.band.name());
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<8} {:>5} {:>5} {:>6} {:>8} {:>9} {:>7}", "model", "k", "P", "C", "MCC", "precision", "recall");
        for t in &self.test {
            let c = t.selection.reg_c.map_or("-".to_string(), |c| format!("{c}"));
            let _ = writeln!(
                out,
                "{:<8} {:>5} {:>5} {:>6} {:>8.4} {:>9.4} {:>7.4}",
                t.selection.classifier.name(),
                t.selection.k,
                t.selection.p,
                c,
                t.mcc,
                t.precision,
                t.recall
            );
        }
        for r in &self.rankings {
            let _ = writeln!(out);
            let _ = writeln!(out, "top waveforms, k={} P={}", r.k, r.p);
            let _ = writeln!(out, "{:>5} {:>10} {:>8} {:>10} {:>6} {:>6}", "rank", "codebook", "centroid", "chi2", "o0", "o1");
            for (i, w) in r.waveforms.iter().take(10).enumerate() {
                let _ = writeln!(
                    out,
                    "{:>5} {:>10} {:>8} {:>10.3} {:>6} {:>6}",
                    i + 1,
                    w.codebook.to_string(),
                    w.centroid,
                    w.chi2,
                    w.table.o0,
                    w.table.o1
                );
            }
        }
        out
    }
}

/// Stratified split followed by band selection on the training part.
pub fn stage_band(exp: &Experiment) -> Result<BandArtifact> {
    let cfg = &exp.config;
    let labels: Vec<Class> = exp.segments.iter().map(|s| s.label).collect();
    let (train, test) =
        stratified_split(&labels, cfg.split_fraction, mix_seed(cfg.seed, &[SEED_SPLIT])).stage("split")?;
    let train_segs: Vec<&Segment> = train.iter().map(|&i| &exp.segments[i]).collect();
    let selection = select_band(&train_segs, &cfg.bands, mix_seed(cfg.seed, &[SEED_BAND])).stage("band")?;
    log::info!("band {} selected", selection.band.name());
    let ids = |ix: &[usize]| ix.iter().map(|&i| exp.segments[i].id.clone()).collect();
    Ok(BandArtifact {
        dataset: exp.summary.clone(),
        train_ids: ids(&train),
        test_ids: ids(&test),
        selection,
    })
}

pub fn stage_cv(exp: &Experiment, band: &BandArtifact) -> Result<CvArtifact> {
    let cfg = &exp.config;
    let train = exp.select(&band.train_ids).stage("cv")?;
    let options = CvOptions {
        band: Some(band.selection.band),
        sikmeans: cfg.sikmeans.config(1, 1, 0),
    };
    let results = cross_validate_many(&train, &cfg.grid, &cfg.classifiers, &options, mix_seed(cfg.seed, &[SEED_CV]))
        .stage("cv")?;
    Ok(CvArtifact { results })
}

/// Final hyperparameters: the cross-validated choice when available,
/// otherwise the first grid entry.
pub fn selections(cfg: &ExperimentConfig, cv: Option<&CvArtifact>) -> Vec<Selection> {
    cfg.classifiers
        .iter()
        .map(|&classifier| {
            let best = cv.and_then(|c| c.results.iter().find(|r| r.classifier == classifier));
            match best {
                Some(r) => Selection {
                    classifier,
                    k: r.best.k,
                    p: r.best.p,
                    reg_c: r.best.reg_c,
                },
                None => Selection {
                    classifier,
                    k: cfg.grid.ks[0],
                    p: cfg.grid.ps[0],
                    reg_c: classifier.uses_reg_c().then(|| cfg.grid.reg_cs[0]),
                },
            }
        })
        .collect()
}

/// CSP on the full training set and one codebook pair per distinct `(k, P)`.
pub fn stage_codebooks(exp: &Experiment, band: &BandArtifact, cv: Option<&CvArtifact>) -> Result<CodebookArtifact> {
    let cfg = &exp.config;
    let train = exp.select(&band.train_ids).stage("codebook")?;
    let csp = fit_csp(&train, Some(band.selection.band)).stage("codebook")?;
    let selections = selections(cfg, cv);
    let mut shapes: Vec<(usize, usize)> = Vec::new();
    for s in &selections {
        if !shapes.contains(&(s.k, s.p)) {
            shapes.push((s.k, s.p));
        }
    }
    let sets = shapes
        .into_iter()
        .map(|(k, p)| {
            let sk = cfg.sikmeans.config(k, p, mix_seed(cfg.seed, &[SEED_FINAL, k as u64, p as u64]));
            let (interictal, preictal) = learn_codebooks(&train, &csp, &sk)?;
            Ok(CodebookSet { k, p, interictal, preictal })
        })
        .collect::<Result<Vec<_>>>()
        .stage("codebook")?;
    Ok(CodebookArtifact { csp, selections, sets })
}

pub fn stage_features(exp: &Experiment, band: &BandArtifact, codebooks: &CodebookArtifact) -> Result<FeatureArtifact> {
    let backend = exp.config.sikmeans.backend;
    let train = exp.select(&band.train_ids).stage("features")?;
    let test = exp.select(&band.test_ids).stage("features")?;
    let sets = codebooks
        .sets
        .iter()
        .map(|set| {
            Ok(FeatureSet {
                k: set.k,
                p: set.p,
                train: featurize_all(&train, &codebooks.csp, &set.interictal, &set.preictal, backend)?,
                test: featurize_all(&test, &codebooks.csp, &set.interictal, &set.preictal, backend)?,
            })
        })
        .collect::<Result<Vec<_>>>()
        .stage("features")?;
    Ok(FeatureArtifact { sets })
}

fn feature_set(features: &FeatureArtifact, k: usize, p: usize) -> Result<&FeatureSet> {
    features
        .sets
        .iter()
        .find(|f| f.k == k && f.p == p)
        .ok_or_else(|| Error::Format(format!("no features for k={k}, P={p}")))
}

pub fn stage_train(features: &FeatureArtifact, selections: &[Selection]) -> Result<ModelArtifact> {
    let models = selections
        .iter()
        .map(|&selection| {
            let set = feature_set(features, selection.k, selection.p)?;
            let model = TrainedClassifier::fit(selection.classifier, &set.train, selection.reg_c.unwrap_or(1.0))?;
            Ok(FittedModel { selection, model })
        })
        .collect::<Result<Vec<_>>>()
        .stage("train")?;
    Ok(ModelArtifact { models })
}

pub fn stage_evaluate(features: &FeatureArtifact, models: &ModelArtifact) -> Result<EvalArtifact> {
    let results = models
        .models
        .iter()
        .map(|m| {
            let set = feature_set(features, m.selection.k, m.selection.p)?;
            let predicted = m.model.predict_all(&set.test)?;
            let truth: Vec<Class> = set.test.iter().map(|f| f.label).collect();
            let counts = ConfusionCounts::from_predictions(&truth, &predicted)?;
            let (precision, recall) = precision_recall(&counts);
            let mcc = mcc(&counts)?;
            log::info!("{} test MCC {mcc:.4}", m.selection.classifier.name());
            Ok(TestResult {
                selection: m.selection,
                counts,
                mcc,
                precision,
                recall,
            })
        })
        .collect::<Result<Vec<_>>>()
        .stage("evaluate")?;
    Ok(EvalArtifact { results })
}

pub fn stage_rank(features: &FeatureArtifact) -> Result<RankArtifact> {
    let rankings = features
        .sets
        .iter()
        .map(|set| {
            Ok(Ranking {
                k: set.k,
                p: set.p,
                waveforms: rank_waveforms(&set.test)?,
            })
        })
        .collect::<Result<Vec<_>>>()
        .stage("rank")?;
    Ok(RankArtifact { rankings })
}

pub fn build_report(
    config: &ExperimentConfig,
    band: &BandArtifact,
    cv: Option<&CvArtifact>,
    eval: &EvalArtifact,
    rank: &RankArtifact,
) -> Result<Report> {
    Ok(Report {
        format: "sikwave-report".into(),
        version: FORMAT_VERSION,
        config_hash: config.hash()?,
        seed: config.seed,
        config: ExperimentConfig {
            output_dir: None,
            ..config.clone()
        },
        dataset: band.dataset.clone(),
        n_train: band.train_ids.len(),
        n_test: band.test_ids.len(),
        band: band.selection.clone(),
        cv: cv.map(|c| c.results.clone()).unwrap_or_default(),
        test: eval.results.clone(),
        rankings: rank.rankings.clone(),
    })
}

/// Writes `report.json` and `report.txt` into `dir`.
pub fn write_report(dir: &Path, report: &Report) -> Result<()> {
    io::write_json(&dir.join(REPORT_FILE), report)?;
    std::fs::write(dir.join(REPORT_TEXT_FILE), report.to_text())?;
    Ok(())
}

/// Runs every stage in memory; when `out` is given, writes each artifact
/// and the report there.
pub fn run_experiment(exp: &Experiment, out: Option<&Path>) -> Result<Report> {
    let hash = exp.config_hash.as_str();
    let save = |name: &str, format: &str, value: &dyn erased::Save| -> Result<()> {
        match out {
            Some(dir) => value.save(&dir.join(name), format, hash),
            None => Ok(()),
        }
    };
    let band = stage_band(exp)?;
    save(BAND_FILE, "band", &band)?;
    let cv = stage_cv(exp, &band)?;
    save(CV_FILE, "cv", &cv)?;
    let codebooks = stage_codebooks(exp, &band, Some(&cv))?;
    save(CODEBOOK_FILE, "codebooks", &codebooks)?;
    let features = stage_features(exp, &band, &codebooks)?;
    save(FEATURE_FILE, "features", &features)?;
    let models = stage_train(&features, &codebooks.selections)?;
    save(MODEL_FILE, "models", &models)?;
    let eval = stage_evaluate(&features, &models)?;
    save(EVAL_FILE, "evaluation", &eval)?;
    let rank = stage_rank(&features)?;
    save(RANK_FILE, "ranking", &rank)?;
    let report = build_report(&exp.config, &band, Some(&cv), &eval, &rank)?;
    if let Some(dir) = out {
        write_report(dir, &report)?;
    }
    Ok(report)
}

/// Loads the dataset behind `manifest` and runs the whole experiment.
pub fn run_pipeline(config: &ExperimentConfig, manifest: &Path) -> Result<Report> {
    let exp = Experiment::load(config.clone(), manifest)?;
    run_experiment(&exp, config.output_dir.as_deref())
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::Config("thread count must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Typed artifact access by file name, shared with the command-line tool.
pub fn load<T: serde::de::DeserializeOwned>(dir: &Path, file: &str, format: &str, hash: &str) -> Result<T> {
    read_artifact(&dir.join(file), format, Some(hash))
}

mod erased {
    use super::*;

    pub trait Save {
        fn save(&self, path: &Path, format: &str, hash: &str) -> Result<()>;
    }

    impl<T: Serialize> Save for T {
        fn save(&self, path: &Path, format: &str, hash: &str) -> Result<()> {
            write_artifact(path, format, hash, self)
        }
    }
}
