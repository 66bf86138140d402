//! Versioned JSON persistence of a trained model.
//!
//! Reals are written in shortest round-trip form, so a reloaded model is
//! bit-identical to the one that was saved.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::{Centroid, ClusterConfig, ClusterModel, Seeding};
use crate::reduce::DuplicatePolicy;
use crate::similarity::{Idsim, SigmaStrategy, SimilarityConfig, Sigmas};
use crate::trace::{LabeledDataset, Vocabulary};

pub const FORMAT_VERSION: u32 = 1;

/// A fitted clustering together with everything needed to reuse it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub vocabulary: Vocabulary,
    pub cluster: ClusterModel,
    pub duplicate_policy: DuplicatePolicy,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format_version: u32,
    vocabulary: Vocabulary,
    k: usize,
    centroids: Vec<Centroid>,
    assignment: Vec<usize>,
    similarity_config: SimilarityDoc,
    clustering_config: ClusteringDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimilarityDoc {
    sigma_strategy: SigmaStrategy,
    zero_sigma_epsilon: f64,
    resolved_sigmas: Sigmas,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusteringDoc {
    seeding: Seeding,
    max_iterations: usize,
    neighbor_duplicates: DuplicatePolicy,
    converged: bool,
    iterations_run: usize,
    history: Vec<Vec<usize>>,
}

impl TrainedModel {
    pub fn new(vocabulary: Vocabulary, cluster: ClusterModel, duplicate_policy: DuplicatePolicy) -> Result<Self> {
        if vocabulary.len() != cluster.dims() {
            return Err(Error::VocabularyMismatch(format!(
                "vocabulary has {} calls, centroids have {}",
                vocabulary.len(),
                cluster.dims()
            )));
        }
        Ok(Self {
            vocabulary,
            cluster,
            duplicate_policy,
        })
    }

    /// Fails unless `training` is the dataset this model was fitted on, in shape.
    pub fn check_training(&self, training: &LabeledDataset) -> Result<()> {
        self.vocabulary.ensure_same(training.vocabulary())?;
        if training.len() != self.cluster.assignment().len() {
            return Err(Error::InvalidModel(format!(
                "model was fitted on {} processes, training set has {}",
                self.cluster.assignment().len(),
                training.len()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let c = &self.cluster;
        let cfg = c.config();
        let doc = ModelDoc {
            format_version: FORMAT_VERSION,
            vocabulary: self.vocabulary.clone(),
            k: c.k(),
            centroids: c.centroids().to_vec(),
            assignment: c.assignment().to_vec(),
            similarity_config: SimilarityDoc {
                sigma_strategy: c.measure().config().sigma_strategy,
                zero_sigma_epsilon: c.measure().config().zero_sigma_epsilon,
                resolved_sigmas: c.measure().sigmas().clone(),
            },
            clustering_config: ClusteringDoc {
                seeding: cfg.seeding.clone(),
                max_iterations: cfg.max_iterations,
                neighbor_duplicates: self.duplicate_policy,
                converged: c.converged(),
                iterations_run: c.iterations_run(),
                history: c.history().to_vec(),
            },
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("model serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text).map_err(|e| Error::InvalidModel(e.to_string()))?;
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::InvalidModel(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                doc.format_version
            )));
        }
        let similarity = SimilarityConfig {
            sigma_strategy: doc.similarity_config.sigma_strategy,
            zero_sigma_epsilon: doc.similarity_config.zero_sigma_epsilon,
        };
        let measure = Idsim::from_parts(similarity, doc.similarity_config.resolved_sigmas)?;
        let cc = doc.clustering_config;
        let config = ClusterConfig {
            k: doc.k,
            seeding: cc.seeding,
            max_iterations: cc.max_iterations,
            similarity,
        };
        if cc.history.last() != Some(&doc.assignment) {
            return Err(Error::InvalidModel(
                "assignment differs from the last history stage".to_string(),
            ));
        }
        if cc.iterations_run != cc.history.len() {
            return Err(Error::InvalidModel(
                "iterations_run differs from the history length".to_string(),
            ));
        }
        let centroids = doc
            .centroids
            .into_iter()
            .map(|c| Centroid::new(c.values().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        let cluster = ClusterModel::from_parts(config, measure, centroids, cc.history, cc.converged)?;
        Self::new(doc.vocabulary, cluster, cc.neighbor_duplicates)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
