use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sikwave::io::{self, write_artifact};
use sikwave::labeling::label_segments;
use sikwave::pipeline::{
    self, build_report, load, stage_band, stage_codebooks, stage_cv, stage_evaluate, stage_features, stage_rank,
    stage_train, write_report, BandArtifact, CodebookArtifact, CvArtifact, EvalArtifact, Experiment,
    ExperimentConfig, FeatureArtifact, ModelArtifact, BAND_FILE, CODEBOOK_FILE, CV_FILE, EVAL_FILE, FEATURE_FILE,
    MODEL_FILE, RANK_FILE,
};
use sikwave::sikmeans::Backend;
use sikwave::synth::{make_dataset, SynthConfig};
use sikwave::{Error, Result};

/// Shift-invariant waveform codebooks for preictal/interictal classification.
#[derive(Parser)]
#[command(name = "sikwave", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// JSON config (experiment config, or synthetic config for `synth`)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for artifacts, datasets and reports
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the assignment backend
    #[arg(long)]
    backend: Option<Backend>,
    /// Dataset manifest
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with planted waveforms
    Synth(Common),
    /// Label manifest segments from seizure annotations
    Label(Common),
    /// Split the dataset and select the CSP band
    Band(Common),
    /// Cross-validate codebook size, centroid length and regularization
    Cv(Common),
    /// Learn the final codebooks
    Codebook(Common),
    /// Compute bag-of-waves features for the train and test segments
    Features(Common),
    /// Fit the classifiers
    Train(Common),
    /// Score the classifiers on the test segments
    Evaluate(Common),
    /// Rank master-codebook waveforms by χ² and write the report
    Rank(Common),
    /// Run every stage
    Pipeline(Common),
}

fn out_dir(common: &Common, cfg: Option<&ExperimentConfig>) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn experiment_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(backend) = common.backend {
        cfg.sikmeans.backend = backend;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn manifest_path(common: &Common) -> Result<&Path> {
    common
        .data
        .as_deref()
        .ok_or_else(|| Error::Config("no dataset given; pass --data MANIFEST".into()))
}

fn experiment(common: &Common, cfg: &ExperimentConfig) -> Result<Experiment> {
    Experiment::load(cfg.clone(), manifest_path(common)?)
}

/// Loads an artifact only if its file exists.
fn optional<T: serde::de::DeserializeOwned>(dir: &Path, file: &str, format: &str, hash: &str) -> Result<Option<T>> {
    if dir.join(file).exists() {
        load(dir, file, format, hash).map(Some)
    } else {
        Ok(None)
    }
}

fn synth(common: &Common) -> Result<()> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read(path).map_err(|_| Error::MissingArtifact(path.clone()))?;
            serde_json::from_slice::<SynthConfig>(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => SynthConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let dir = out_dir(common, None);
    let (segments, truth) = make_dataset(&cfg)?;
    io::write_dataset(&dir, &segments, cfg.fs)?;
    write_artifact(&dir.join("ground_truth.json"), "ground-truth", &io::json_hash(&cfg)?, &truth)?;
    println!("wrote {} segments to {}", segments.len(), dir.display());
    Ok(())
}

fn label(common: &Common) -> Result<()> {
    let src = manifest_path(common)?;
    let mut manifest = label_segments(&io::read_manifest(src)?)?;
    let dir = out_dir(common, None);
    let src_dir = src.parent().unwrap_or(Path::new("."));
    if std::fs::canonicalize(src_dir).ok() != std::fs::canonicalize(&dir).ok() {
        let base = std::fs::canonicalize(src_dir)?;
        for rec in &mut manifest.segments {
            rec.path = base.join(&rec.path);
        }
    }
    io::write_manifest(&dir.join("manifest.json"), &manifest)?;
    let count = |f: fn(&Option<sikwave::Class>) -> bool| manifest.segments.iter().filter(|s| f(&s.label)).count();
    println!(
        "preictal {}, interictal {}, excluded {}",
        count(|l| *l == Some(sikwave::Class::Preictal)),
        count(|l| *l == Some(sikwave::Class::Interictal)),
        count(|l| l.is_none())
    );
    Ok(())
}

fn staged(command: &Command, common: &Common) -> Result<()> {
    let cfg = experiment_config(common)?;
    let hash = cfg.hash()?;
    let dir = out_dir(common, Some(&cfg));
    let dir = dir.as_path();
    let save = |file: &str, format: &str, value: &dyn erased_save::Save| value.save(&dir.join(file), format, &hash);
    match command {
        Command::Band(_) => {
            let exp = experiment(common, &cfg)?;
            let band = stage_band(&exp)?;
            println!("band {}", band.selection.band.name());
            save(BAND_FILE, "band", &band)
        }
        Command::Cv(_) => {
            let band: BandArtifact = load(dir, BAND_FILE, "band", &hash)?;
            let exp = experiment(common, &cfg)?;
            let cv = stage_cv(&exp, &band)?;
            for r in &cv.results {
                println!(
                    "{}: k={} P={} C={:?} mean MCC {:.4}",
                    r.classifier.name(),
                    r.best.k,
                    r.best.p,
                    r.best.reg_c,
                    r.best.mean_mcc
                );
            }
            save(CV_FILE, "cv", &cv)
        }
        Command::Codebook(_) => {
            let band: BandArtifact = load(dir, BAND_FILE, "band", &hash)?;
            let cv: Option<CvArtifact> = optional(dir, CV_FILE, "cv", &hash)?;
            if cv.is_none() {
                log::warn!("no {CV_FILE} in {}; using the first grid values", dir.display());
            }
            let exp = experiment(common, &cfg)?;
            let codebooks = stage_codebooks(&exp, &band, cv.as_ref())?;
            save(CODEBOOK_FILE, "codebooks", &codebooks)
        }
        Command::Features(_) => {
            let band: BandArtifact = load(dir, BAND_FILE, "band", &hash)?;
            let codebooks: CodebookArtifact = load(dir, CODEBOOK_FILE, "codebooks", &hash)?;
            let exp = experiment(common, &cfg)?;
            save(FEATURE_FILE, "features", &stage_features(&exp, &band, &codebooks)?)
        }
        Command::Train(_) => {
            let codebooks: CodebookArtifact = load(dir, CODEBOOK_FILE, "codebooks", &hash)?;
            let features: FeatureArtifact = load(dir, FEATURE_FILE, "features", &hash)?;
            save(MODEL_FILE, "models", &stage_train(&features, &codebooks.selections)?)
        }
        Command::Evaluate(_) => {
            let features: FeatureArtifact = load(dir, FEATURE_FILE, "features", &hash)?;
            let models: ModelArtifact = load(dir, MODEL_FILE, "models", &hash)?;
            let eval = stage_evaluate(&features, &models)?;
            for r in &eval.results {
                println!(
                    "{}: MCC {:.4} precision {:.4} recall {:.4}",
                    r.selection.classifier.name(),
                    r.mcc,
                    r.precision,
                    r.recall
                );
            }
            save(EVAL_FILE, "evaluation", &eval)
        }
        Command::Rank(_) => {
            let _: CodebookArtifact = load(dir, CODEBOOK_FILE, "codebooks", &hash)?;
            let features: FeatureArtifact = load(dir, FEATURE_FILE, "features", &hash)?;
            let rank = stage_rank(&features)?;
            save(RANK_FILE, "ranking", &rank)?;
            let band: Option<BandArtifact> = optional(dir, BAND_FILE, "band", &hash)?;
            let eval: Option<EvalArtifact> = optional(dir, EVAL_FILE, "evaluation", &hash)?;
            if let (Some(band), Some(eval)) = (band, eval) {
                let cv: Option<CvArtifact> = optional(dir, CV_FILE, "cv", &hash)?;
                let report = build_report(&cfg, &band, cv.as_ref(), &eval, &rank)?;
                write_report(dir, &report)?;
                print!("{}", report.to_text());
            }
            Ok(())
        }
        Command::Pipeline(_) => {
            let exp = experiment(common, &cfg)?;
            let report = pipeline::run_experiment(&exp, Some(dir))?;
            print!("{}", report.to_text());
            Ok(())
        }
        Command::Synth(_) | Command::Label(_) => unreachable!("handled before staging"),
    }
}

mod erased_save {
    use std::path::Path;

    pub trait Save {
        fn save(&self, path: &Path, format: &str, hash: &str) -> sikwave::Result<()>;
    }

    impl<T: serde::Serialize> Save for T {
        fn save(&self, path: &Path, format: &str, hash: &str) -> sikwave::Result<()> {
            sikwave::io::write_artifact(path, format, hash, self)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = match &cli.command {
        Command::Synth(c)
        | Command::Label(c)
        | Command::Band(c)
        | Command::Cv(c)
        | Command::Codebook(c)
        | Command::Features(c)
        | Command::Train(c)
        | Command::Evaluate(c)
        | Command::Rank(c)
        | Command::Pipeline(c) => c.clone(),
    };
    pipeline::with_threads(common.threads, || match &cli.command {
        Command::Synth(_) => synth(&common),
        Command::Label(_) => label(&common),
        other => staged(other, &common),
    })?
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("SIKWAVE_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
