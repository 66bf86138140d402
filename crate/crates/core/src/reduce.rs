//! Reduction of each process to one scalar feature.
//!
//! The feature is the mean of the process's similarities to all `k` cluster
//! centroids and to its nearest neighbour, so it lies in `[0.5, 1]` like
//! every IDSIM value.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::ClusterModel;
use crate::trace::{LabeledDataset, ProcessVector};

/// Whether exact copies of a training process count as its neighbours.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplicatePolicy {
    /// Identical count vectors are the same observation and are skipped.
    #[default]
    Skip,
    /// Any other process is a candidate, including identical ones.
    Keep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedFeature {
    pub process_id: String,
    pub cluster_sims: Vec<f64>,
    pub nn_id: String,
    pub nn_sim: f64,
    pub total: f64,
    pub feature: f64,
    pub distance: f64,
}

impl ReducedFeature {
    pub fn new(process_id: impl Into<String>, cluster_sims: Vec<f64>, nn_id: impl Into<String>, nn_sim: f64) -> Self {
        let mut total = 0.0;
        for s in &cluster_sims {
            total += s;
        }
        total += nn_sim;
        let feature = total / (cluster_sims.len() + 1) as f64;
        Self {
            process_id: process_id.into(),
            cluster_sims,
            nn_id: nn_id.into(),
            nn_sim,
            total,
            feature,
            distance: 1.0 - feature,
        }
    }
}

fn check_model(model: &ClusterModel, training: &LabeledDataset) -> Result<()> {
    if training.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if model.assignment().len() != training.len() {
        return Err(Error::InvalidModel(format!(
            "model was fitted on {} processes, training set has {}",
            model.assignment().len(),
            training.len()
        )));
    }
    if model.dims() != training.dims() {
        return Err(Error::VocabularyMismatch(format!(
            "model has {} calls, training set has {}",
            model.dims(),
            training.dims()
        )));
    }
    Ok(())
}

fn check_vector(p: &ProcessVector, training: &LabeledDataset) -> Result<()> {
    if p.len() != training.dims() {
        return Err(Error::VocabularyMismatch(format!(
            "process {:?} has {} counts, training vocabulary has {} calls",
            p.id(),
            p.len(),
            training.dims()
        )));
    }
    Ok(())
}

/// Most similar candidate, lowest index on ties.
fn best_of(
    p: &ProcessVector,
    training: &LabeledDataset,
    model: &ClusterModel,
    candidates: impl Iterator<Item = usize>,
) -> Option<Neighbor> {
    let mut best: Option<(usize, f64)> = None;
    for j in candidates {
        let s = model.measure().score(p.values(), training.process(j).values());
        if best.map_or(true, |(_, b)| s > b) {
            best = Some((j, s));
        }
    }
    best.map(|(index, similarity)| Neighbor {
        index,
        id: training.process(index).id().to_string(),
        similarity,
    })
}

/// Nearest co-clustered training neighbour of process `index`.
///
/// Candidates exclude the process itself and, under [`DuplicatePolicy::Skip`],
/// its exact copies. If the cluster offers no candidate the search widens to
/// the whole training set; a one-process dataset pairs the process with itself.
pub fn nearest_neighbor_within_cluster(
    index: usize,
    model: &ClusterModel,
    training: &LabeledDataset,
    policy: DuplicatePolicy,
) -> Result<Neighbor> {
    check_model(model, training)?;
    if index >= training.len() {
        return Err(Error::IdMismatch(format!("no training process at position {index}")));
    }
    let p = training.process(index);
    let own = model.assignment()[index];
    let eligible = |j: usize| {
        j != index
            && (policy == DuplicatePolicy::Keep || training.process(j).counts() != p.counts())
    };
    let n = training.len();
    let found = best_of(p, training, model, (0..n).filter(|&j| model.assignment()[j] == own && eligible(j)))
        .or_else(|| best_of(p, training, model, (0..n).filter(|&j| eligible(j))))
        .or_else(|| best_of(p, training, model, (0..n).filter(|&j| j != index)))
        .unwrap_or_else(|| Neighbor {
            index,
            id: p.id().to_string(),
            similarity: 1.0,
        });
    Ok(found)
}

fn centroid_sims(p: &ProcessVector, model: &ClusterModel) -> Vec<f64> {
    model
        .centroids()
        .iter()
        .map(|c| model.measure().score(p.values(), c.values()))
        .collect()
}

pub fn reduce_training(
    model: &ClusterModel,
    training: &LabeledDataset,
    policy: DuplicatePolicy,
) -> Result<Vec<ReducedFeature>> {
    check_model(model, training)?;
    (0..training.len())
        .into_par_iter()
        .map(|i| {
            let p = training.process(i);
            let nn = nearest_neighbor_within_cluster(i, model, training, policy)?;
            Ok(ReducedFeature::new(p.id(), centroid_sims(p, model), nn.id, nn.similarity))
        })
        .collect()
}

/// Nearest training process to `p` over the whole training set.
pub fn nearest_training_neighbor(
    p: &ProcessVector,
    model: &ClusterModel,
    training: &LabeledDataset,
) -> Result<Neighbor> {
    check_model(model, training)?;
    check_vector(p, training)?;
    Ok(best_of(p, training, model, 0..training.len()).expect("training set is non-empty"))
}

/// Reduces a process that took no part in training.
pub fn reduce_test(
    p: &ProcessVector,
    model: &ClusterModel,
    training: &LabeledDataset,
) -> Result<ReducedFeature> {
    let nn = nearest_training_neighbor(p, model, training)?;
    Ok(ReducedFeature::new(p.id(), centroid_sims(p, model), nn.id, nn.similarity))
}

/// Writes `id,cluster_sim_0..k-1,nn_id,nn_sim,total,feature,distance`.
pub fn write_features_csv<W: Write>(features: &[ReducedFeature], writer: W) -> Result<()> {
    let k = features.first().map_or(0, |f| f.cluster_sims.len());
    let mut out = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    header.extend((0..k).map(|j| format!("cluster_sim_{j}")));
    header.extend(["nn_id", "nn_sim", "total", "feature", "distance"].map(String::from));
    out.write_record(&header).map_err(|e| Error::Csv(e.to_string()))?;
    for f in features {
        if f.cluster_sims.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                found: f.cluster_sims.len(),
            });
        }
        let mut row = vec![f.process_id.clone()];
        row.extend(f.cluster_sims.iter().map(f64::to_string));
        row.push(f.nn_id.clone());
        row.extend([f.nn_sim, f.total, f.feature, f.distance].map(|v| v.to_string()));
        out.write_record(&row).map_err(|e| Error::Csv(e.to_string()))?;
    }
    out.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}
