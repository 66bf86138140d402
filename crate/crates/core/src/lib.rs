//! Anomalous-process detection from system-call count vectors.
//!
//! Processes are compared with a bounded Gaussian similarity ([`similarity`]),
//! grouped with k-means under that similarity ([`kmeans`]), reduced to one
//! scalar feature each from their centroid and nearest-neighbour similarities
//! ([`reduce`]) and classified by nearest neighbour ([`detect`]).

pub mod casestudy;
pub mod detect;
pub mod error;
pub mod kmeans;
pub mod model;
pub mod reduce;
pub mod similarity;
pub mod synthetic;
pub mod trace;

pub use detect::{classify_raw, classify_reduced, evaluate, EvalReport, Mode, Prediction};
pub use error::{Error, Result};
pub use kmeans::{cluster, Centroid, ClusterConfig, ClusterModel, Seeding};
pub use model::TrainedModel;
pub use reduce::{reduce_test, reduce_training, DuplicatePolicy, ReducedFeature};
pub use similarity::{Idsim, SigmaStrategy, SimilarityConfig, SimilarityValue};
pub use trace::{builtin_case_study, load_matrix, Label, LabeledDataset, ProcessVector, Vocabulary};
