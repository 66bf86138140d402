use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use log::{info, warn};
use rayon::prelude::*;

use idsim_core::detect::{evaluate as score_predictions, read_predictions_csv, truth_of, write_predictions_csv};
use idsim_core::reduce::write_features_csv;
use idsim_core::{
    builtin_case_study, casestudy, classify_raw, classify_reduced, cluster, load_matrix,
    reduce_training, ClusterConfig, DuplicatePolicy, Error, LabeledDataset, Label, Mode, Prediction,
    Seeding, SimilarityConfig, TrainedModel,
};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Usage(_) => "usage",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Usage(msg) => f.write_str(msg),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Core(Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Settings for one training run; defaults mirror the worked example.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub k: usize,
    pub seeding: Seeding,
    pub max_iterations: usize,
    pub similarity: SimilarityConfig,
    pub keep_duplicates: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k: 2,
            seeding: Seeding::FirstK,
            max_iterations: 100,
            similarity: SimilarityConfig::default(),
            keep_duplicates: false,
        }
    }
}

impl RunConfig {
    fn cluster_config(&self) -> ClusterConfig {
        ClusterConfig {
            k: self.k,
            seeding: self.seeding.clone(),
            max_iterations: self.max_iterations,
            similarity: self.similarity,
        }
    }

    fn duplicate_policy(&self) -> DuplicatePolicy {
        if self.keep_duplicates {
            DuplicatePolicy::Keep
        } else {
            DuplicatePolicy::Skip
        }
    }
}

#[derive(Debug, Clone)]
pub enum TrainingSource {
    File(PathBuf),
    CaseStudy,
}

impl TrainingSource {
    fn load(&self) -> Result<LabeledDataset, CliError> {
        let ds = match self {
            TrainingSource::File(path) => load_matrix(path, true)?,
            TrainingSource::CaseStudy => builtin_case_study(),
        };
        Ok(ds)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error(path, e))
}

pub fn validate(path: &Path, expect_labels: bool) -> Result<ExitCode, CliError> {
    let ds = load_matrix(path, expect_labels)?;
    let mut line = format!(
        "ok: {} processes, {} system calls",
        ds.len(),
        ds.dims()
    );
    if let Some(labels) = ds.labels() {
        let abnormal = labels.iter().filter(|l| **l == Label::Abnormal).count();
        line.push_str(&format!(
            ", {} normal, {abnormal} abnormal",
            labels.len() - abnormal
        ));
    }
    println!("{line}");
    Ok(ExitCode::SUCCESS)
}

pub fn train(
    source: &TrainingSource,
    config: &RunConfig,
    model_out: &Path,
    features_out: &Path,
) -> Result<ExitCode, CliError> {
    let training = source.load()?;
    let model = cluster(&training, &config.cluster_config())?;
    info!(
        "clustered {} processes into {} clusters: {} stages, converged = {}",
        training.len(),
        model.k(),
        model.iterations_run(),
        model.converged()
    );
    if !model.converged() {
        warn!(
            "stopped after {} iterations without convergence",
            model.iterations_run()
        );
    }
    let policy = config.duplicate_policy();
    let features = reduce_training(&model, &training, policy)?;
    let trained = TrainedModel::new(training.vocabulary().clone(), model, policy)?;

    fs::write(model_out, trained.to_json()).map_err(|e| io_error(model_out, e))?;
    let mut out = create(features_out)?;
    write_features_csv(&features, &mut out)?;
    out.flush().map_err(|e| io_error(features_out, e))?;
    info!(
        "wrote {} and {}",
        model_out.display(),
        features_out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn is_blank(path: &Path) -> Result<bool, CliError> {
    match fs::read(path) {
        Ok(bytes) => Ok(bytes.iter().all(u8::is_ascii_whitespace)),
        Err(e) => Err(CliError::Core(Error::io(path, e))),
    }
}

/// Predictions for every row of `test`, in file order.
pub fn predict(
    trained: &TrainedModel,
    training: &LabeledDataset,
    test: &LabeledDataset,
    mode: Mode,
    knn: usize,
) -> Result<Vec<Prediction>, CliError> {
    trained.check_training(training)?;
    training.require_labels()?;
    trained.vocabulary.ensure_same(test.vocabulary())?;
    let model = &trained.cluster;
    let predictions = match mode {
        Mode::Raw => {
            if knn != 1 {
                warn!("--knn is ignored in raw mode");
            }
            test.processes()
                .par_iter()
                .map(|p| classify_raw(p, training, model.measure()))
                .collect::<Result<Vec<_>, _>>()?
        }
        Mode::Reduced => {
            let features = reduce_training(model, training, trained.duplicate_policy)?;
            test.processes()
                .par_iter()
                .map(|p| classify_reduced(p, model, &features, training, knn))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    Ok(predictions)
}

pub fn classify(
    model_path: &Path,
    source: &TrainingSource,
    test_path: &Path,
    expect_labels: bool,
    mode: Mode,
    knn: usize,
    out: Option<&Path>,
) -> Result<ExitCode, CliError> {
    let trained = TrainedModel::load(model_path)?;
    let training = source.load()?;
    let predictions = if is_blank(test_path)? {
        trained.check_training(&training)?;
        Vec::new()
    } else {
        let test = load_matrix(test_path, expect_labels)?;
        predict(&trained, &training, &test, mode, knn)?
    };
    let abnormal = predictions
        .iter()
        .filter(|p| p.predicted == Label::Abnormal)
        .count();
    info!(
        "classified {} processes: {abnormal} abnormal",
        predictions.len()
    );
    match out {
        Some(path) => {
            let mut w = create(path)?;
            write_predictions_csv(&predictions, &mut w)?;
            w.flush().map_err(|e| io_error(path, e))?;
        }
        None => {
            let stdout = io::stdout();
            write_predictions_csv(&predictions, stdout.lock())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn evaluate_files(predictions: &Path, truth: &Path) -> Result<idsim_core::EvalReport, CliError> {
    let file = File::open(predictions).map_err(|e| CliError::Core(Error::io(predictions, e)))?;
    let predictions = read_predictions_csv(file)?;
    let truth = truth_of(&load_matrix(truth, true)?)?;
    Ok(score_predictions(&predictions, &truth)?)
}

pub fn evaluate(predictions: &Path, truth: &Path, json: bool) -> Result<ExitCode, CliError> {
    let report = evaluate_files(predictions, truth)?;
    if json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    Ok(ExitCode::SUCCESS)
}

pub fn casestudy() -> Result<ExitCode, CliError> {
    let report = casestudy::reproduce()?;
    print!("{}", report.render());
    if report.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}
