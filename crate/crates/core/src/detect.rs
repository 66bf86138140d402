//! Normal/abnormal classification of test processes and its scoring.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::ClusterModel;
use crate::reduce::{reduce_test, ReducedFeature};
use crate::similarity::Idsim;
use crate::trace::{Label, LabeledDataset, ProcessVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Nearest neighbour over raw count vectors.
    Raw,
    /// k nearest neighbours over the reduced scalar feature.
    Reduced,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "raw" => Ok(Mode::Raw),
            "reduced" => Ok(Mode::Reduced),
            other => Err(format!("unknown mode {other:?} (expected raw or reduced)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub process_id: String,
    pub predicted: Label,
    pub nn_id: String,
    /// Similarity to `nn_id` in raw mode, absolute feature gap in reduced mode.
    pub score: f64,
}

pub fn classify_raw(p: &ProcessVector, training: &LabeledDataset, measure: &Idsim) -> Result<Prediction> {
    let labels = training.require_labels()?;
    if training.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if p.len() != training.dims() {
        return Err(Error::VocabularyMismatch(format!(
            "process {:?} has {} counts, training vocabulary has {} calls",
            p.id(),
            p.len(),
            training.dims()
        )));
    }
    measure.check_dims(p.len())?;
    let mut best = (0, f64::NEG_INFINITY);
    for (j, q) in training.processes().iter().enumerate() {
        let s = measure.score(p.values(), q.values());
        if s > best.1 {
            best = (j, s);
        }
    }
    Ok(Prediction {
        process_id: p.id().to_string(),
        predicted: labels[best.0],
        nn_id: training.process(best.0).id().to_string(),
        score: best.1,
    })
}

/// Outcome of a k-NN vote on the scalar feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVote {
    pub label: Label,
    /// Nearest voter carrying the winning label.
    pub index: usize,
    pub gap: f64,
}

/// Majority label among the `k_nn` training features closest to `feature`.
///
/// Equal gaps resolve to the lower training index and a split vote resolves to
/// `Abnormal`.
pub fn vote_by_feature(
    feature: f64,
    training_features: &[ReducedFeature],
    labels: &[Label],
    k_nn: usize,
) -> Result<FeatureVote> {
    if training_features.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if labels.len() != training_features.len() {
        return Err(Error::LabelCount {
            labels: labels.len(),
            processes: training_features.len(),
        });
    }
    if k_nn == 0 || k_nn > training_features.len() {
        return Err(Error::InvalidConfig(format!(
            "k_nn must be in 1..={}, got {k_nn}",
            training_features.len()
        )));
    }
    let mut ranked: Vec<(usize, f64)> = training_features
        .iter()
        .enumerate()
        .map(|(i, f)| (i, (feature - f.feature).abs()))
        .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    ranked.truncate(k_nn);
    let abnormal = ranked.iter().filter(|(i, _)| labels[*i] == Label::Abnormal).count();
    let label = if 2 * abnormal >= k_nn {
        Label::Abnormal
    } else {
        Label::Normal
    };
    let &(index, gap) = ranked
        .iter()
        .find(|(i, _)| labels[*i] == label)
        .expect("winning label has a voter");
    Ok(FeatureVote { label, index, gap })
}

pub fn classify_reduced(
    p: &ProcessVector,
    model: &ClusterModel,
    training_features: &[ReducedFeature],
    training: &LabeledDataset,
    k_nn: usize,
) -> Result<Prediction> {
    let labels = training.require_labels()?;
    if training_features.len() != training.len()
        || training_features
            .iter()
            .zip(training.processes())
            .any(|(f, q)| f.process_id != q.id())
    {
        return Err(Error::IdMismatch(
            "training features do not line up with the training set".to_string(),
        ));
    }
    // An exact copy of a training process is that process and keeps its feature.
    let feature = match training.processes().iter().position(|q| q.counts() == p.counts()) {
        Some(j) => training_features[j].feature,
        None => reduce_test(p, model, training)?.feature,
    };
    let vote = vote_by_feature(feature, training_features, labels, k_nn)?;
    Ok(Prediction {
        process_id: p.id().to_string(),
        predicted: vote.label,
        nn_id: training.process(vote.index).id().to_string(),
        score: vote.gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub predictions: usize,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub detection_rate: Option<f64>,
    pub false_positive_rate: Option<f64>,
    pub accuracy: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let total = tp + fp + tn + fn_;
        Self {
            predictions: total,
            tp,
            fp,
            tn,
            fn_,
            detection_rate: ratio(tp, tp + fn_),
            false_positive_rate: ratio(fp, fp + tn),
            accuracy: ratio(tp + tn, total),
        }
    }

    /// Fixed-key `key: value` block; undefined rates print `n/a`.
    pub fn to_text(&self) -> String {
        let rate = |r: Option<f64>| r.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6}"));
        let mut out = String::new();
        let _ = writeln!(out, "predictions: {}", self.predictions);
        let _ = writeln!(out, "tp: {}", self.tp);
        let _ = writeln!(out, "fp: {}", self.fp);
        let _ = writeln!(out, "tn: {}", self.tn);
        let _ = writeln!(out, "fn: {}", self.fn_);
        let _ = writeln!(out, "detection_rate: {}", rate(self.detection_rate));
        let _ = writeln!(out, "false_positive_rate: {}", rate(self.false_positive_rate));
        let _ = writeln!(out, "accuracy: {}", rate(self.accuracy));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Ground truth `(id, label)` pairs of a labeled dataset.
pub fn truth_of(dataset: &LabeledDataset) -> Result<Vec<(String, Label)>> {
    let labels = dataset.require_labels()?;
    Ok(dataset
        .processes()
        .iter()
        .zip(labels)
        .map(|(p, &l)| (p.id().to_string(), l))
        .collect())
}

/// Confusion counts with `Abnormal` as the positive class.
pub fn evaluate(predictions: &[Prediction], truth: &[(String, Label)]) -> Result<EvalReport> {
    let mut expected: HashMap<&str, Label> = HashMap::with_capacity(truth.len());
    for (id, label) in truth {
        if expected.insert(id.as_str(), *label).is_some() {
            return Err(Error::IdMismatch(format!("truth lists {id:?} twice")));
        }
    }
    if predictions.len() != truth.len() {
        return Err(Error::IdMismatch(format!(
            "{} predictions for {} labeled processes",
            predictions.len(),
            truth.len()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for p in predictions {
        let actual = expected.remove(p.process_id.as_str()).ok_or_else(|| {
            Error::IdMismatch(format!("no ground truth for {:?}", p.process_id))
        })?;
        match (p.predicted, actual) {
            (Label::Abnormal, Label::Abnormal) => tp += 1,
            (Label::Abnormal, Label::Normal) => fp += 1,
            (Label::Normal, Label::Normal) => tn += 1,
            (Label::Normal, Label::Abnormal) => fn_ += 1,
        }
    }
    Ok(EvalReport::from_counts(tp, fp, tn, fn_))
}

/// Writes `id,predicted,nn_id,score`.
pub fn write_predictions_csv<W: Write>(predictions: &[Prediction], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["id", "predicted", "nn_id", "score"])
        .map_err(|e| Error::Csv(e.to_string()))?;
    for p in predictions {
        out.write_record([
            p.process_id.as_str(),
            p.predicted.as_str(),
            p.nn_id.as_str(),
            &p.score.to_string(),
        ])
        .map_err(|e| Error::Csv(e.to_string()))?;
    }
    out.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

pub fn read_predictions_csv<R: Read>(reader: R) -> Result<Vec<Prediction>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "predicted", "nn_id", "score"] {
        return Err(Error::BadHeader(
            "predictions header must be id,predicted,nn_id,score".to_string(),
        ));
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let predicted = record[1]
            .parse::<Label>()
            .map_err(|token| Error::UnknownLabel { line, token })?;
        let score = record[3]
            .parse::<f64>()
            .map_err(|_| Error::Csv(format!("bad score {:?} at line {line}", &record[3])))?;
        out.push(Prediction {
            process_id: record[0].to_string(),
            predicted,
            nn_id: record[2].to_string(),
            score,
        });
    }
    Ok(out)
}
