//! k-means over process vectors with IDSIM as the affinity.
//!
//! Each stage assigns every process to the centroid it is most similar to,
//! then replaces each centroid with the per-call mean of its members. The run
//! stops when two consecutive stages produce the same assignment or when the
//! iteration budget is spent.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::{Idsim, SimilarityConfig, SimilarityValue};
use crate::trace::{LabeledDataset, ProcessVector};

/// Per-call mean of a cluster's members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Centroid {
    values: Vec<f64>,
}

impl Centroid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidConfig(format!(
                "centroid entries must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(Self { values })
    }

    pub fn from_process(p: &ProcessVector) -> Self {
        Self {
            values: p.values().to_vec(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Seeding {
    /// The first `k` processes, in file order.
    FirstK,
    /// The named processes, by position.
    Indices(Vec<usize>),
    /// `k` distinct processes drawn with a seeded generator.
    Random(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub k: usize,
    pub seeding: Seeding,
    pub max_iterations: usize,
    pub similarity: SimilarityConfig,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k: 2,
            seeding: Seeding::FirstK,
            max_iterations: 100,
            similarity: SimilarityConfig::default(),
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".to_string()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be at least 1".to_string(),
            ));
        }
        self.similarity.validate()
    }
}

/// Result of a clustering run.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub(crate) k: usize,
    pub(crate) centroids: Vec<Centroid>,
    pub(crate) assignment: Vec<usize>,
    pub(crate) history: Vec<Vec<usize>>,
    pub(crate) converged: bool,
    pub(crate) iterations_run: usize,
    pub(crate) measure: Idsim,
    pub(crate) config: ClusterConfig,
}

impl ClusterModel {
    /// Reassembles a model from stored parts, checking its invariants.
    pub fn from_parts(
        config: ClusterConfig,
        measure: Idsim,
        centroids: Vec<Centroid>,
        history: Vec<Vec<usize>>,
        converged: bool,
    ) -> Result<Self> {
        config.validate()?;
        let k = config.k;
        if centroids.len() != k {
            return Err(Error::InvalidModel(format!(
                "expected {k} centroids, found {}",
                centroids.len()
            )));
        }
        let dims = centroids[0].len();
        if centroids.iter().any(|c| c.len() != dims) {
            return Err(Error::InvalidModel("centroids differ in length".to_string()));
        }
        measure.check_dims(dims)?;
        let assignment = history
            .last()
            .cloned()
            .ok_or_else(|| Error::InvalidModel("empty assignment history".to_string()))?;
        if history.iter().any(|h| h.len() != assignment.len() || h.iter().any(|&c| c >= k)) {
            return Err(Error::InvalidModel(
                "assignment history has an out-of-range cluster or ragged stage".to_string(),
            ));
        }
        if converged && (history.len() < 2 || history[history.len() - 2] != assignment) {
            return Err(Error::InvalidModel(
                "converged model must end with two identical stages".to_string(),
            ));
        }
        Ok(Self {
            k,
            iterations_run: history.len(),
            centroids,
            assignment,
            history,
            converged,
            measure,
            config,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn centroids(&self) -> &[Centroid] {
        &self.centroids
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn history(&self) -> &[Vec<usize>] {
        &self.history
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations_run(&self) -> usize {
        self.iterations_run
    }

    pub fn measure(&self) -> &Idsim {
        &self.measure
    }

    pub fn config(&self) -> &ClusterConfig {
        &self.config
    }

    pub fn dims(&self) -> usize {
        self.centroids[0].len()
    }

    /// Member indices of each cluster, ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        clusters_of(&self.assignment, self.k)
    }
}

/// Groups an assignment vector into ascending member lists per cluster.
pub fn clusters_of(assignment: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); k];
    for (i, &c) in assignment.iter().enumerate() {
        out[c].push(i);
    }
    out
}

pub fn centroid_similarity(
    p: &ProcessVector,
    centroid: &Centroid,
    measure: &Idsim,
) -> Result<SimilarityValue> {
    measure.similarity(p.values(), centroid.values())
}

pub fn seed(dataset: &LabeledDataset, cfg: &ClusterConfig) -> Result<Vec<Centroid>> {
    cfg.validate()?;
    let n = dataset.len();
    if cfg.k > n {
        return Err(Error::KExceedsDataset {
            k: cfg.k,
            processes: n,
        });
    }
    let picks: Vec<usize> = match &cfg.seeding {
        Seeding::FirstK => (0..cfg.k).collect(),
        Seeding::Indices(indices) => {
            if indices.len() != cfg.k {
                return Err(Error::InvalidSeedIndices(format!(
                    "{} indices given for k = {}",
                    indices.len(),
                    cfg.k
                )));
            }
            let mut sorted = indices.clone();
            sorted.sort_unstable();
            if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::InvalidSeedIndices(format!("index {} repeated", w[0])));
            }
            if let Some(bad) = indices.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidSeedIndices(format!(
                    "index {bad} out of range for {n} processes"
                )));
            }
            indices.clone()
        }
        Seeding::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            index::sample(&mut rng, n, cfg.k).into_vec()
        }
    };
    Ok(picks
        .into_iter()
        .map(|i| Centroid::from_process(dataset.process(i)))
        .collect())
}

fn check_centroids(dataset: &LabeledDataset, centroids: &[Centroid], measure: &Idsim) -> Result<()> {
    if centroids.is_empty() {
        return Err(Error::InvalidConfig("no centroids".to_string()));
    }
    for c in centroids {
        if c.len() != dataset.dims() {
            return Err(Error::LengthMismatch {
                expected: dataset.dims(),
                found: c.len(),
            });
        }
    }
    measure.check_dims(dataset.dims())
}

/// Process-by-centroid similarity matrix.
pub fn similarity_table(
    dataset: &LabeledDataset,
    centroids: &[Centroid],
    measure: &Idsim,
) -> Result<Vec<Vec<f64>>> {
    check_centroids(dataset, centroids, measure)?;
    Ok(dataset
        .processes()
        .par_iter()
        .map(|p| {
            centroids
                .iter()
                .map(|c| measure.score(p.values(), c.values()))
                .collect()
        })
        .collect())
}

/// Index of the largest value, first one on ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = j;
        }
    }
    best
}

pub fn assign(dataset: &LabeledDataset, centroids: &[Centroid], measure: &Idsim) -> Result<Vec<usize>> {
    check_centroids(dataset, centroids, measure)?;
    Ok(dataset
        .processes()
        .par_iter()
        .map(|p| {
            let sims: Vec<f64> = centroids
                .iter()
                .map(|c| measure.score(p.values(), c.values()))
                .collect();
            argmax(&sims)
        })
        .collect())
}

/// Mean step. An empty cluster takes the process least similar to its own new
/// centroid; a process re-seeds at most one empty cluster per step.
pub fn update_centroids(
    dataset: &LabeledDataset,
    assignment: &[usize],
    k: usize,
    measure: &Idsim,
) -> Result<Vec<Centroid>> {
    if assignment.len() != dataset.len() {
        return Err(Error::LengthMismatch {
            expected: dataset.len(),
            found: assignment.len(),
        });
    }
    if let Some(&bad) = assignment.iter().find(|&&c| c >= k) {
        return Err(Error::InvalidConfig(format!(
            "assignment names cluster {bad} but k = {k}"
        )));
    }
    let dims = dataset.dims();
    let mut sums = vec![vec![0.0; dims]; k];
    let mut sizes = vec![0usize; k];
    for (p, &c) in dataset.processes().iter().zip(assignment) {
        sizes[c] += 1;
        for (acc, v) in sums[c].iter_mut().zip(p.values()) {
            *acc += v;
        }
    }
    let mut centroids: Vec<Option<Centroid>> = sums
        .into_iter()
        .zip(&sizes)
        .map(|(sum, &size)| {
            (size > 0).then(|| Centroid {
                values: sum.into_iter().map(|s| s / size as f64).collect(),
            })
        })
        .collect();

    if sizes.contains(&0) {
        measure.check_dims(dims)?;
        let mut own: Vec<(usize, f64)> = dataset
            .processes()
            .iter()
            .zip(assignment)
            .enumerate()
            .map(|(i, (p, &c))| {
                let c = centroids[c].as_ref().expect("assigned cluster is non-empty");
                (i, measure.score(p.values(), c.values()))
            })
            .collect();
        // Least similar first, lowest index on ties.
        own.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let mut donors = own.into_iter().map(|(i, _)| i);
        for slot in centroids.iter_mut().filter(|c| c.is_none()) {
            // k <= n keeps the donor list long enough; otherwise reuse the first process.
            let donor = donors.next().unwrap_or(0);
            *slot = Some(Centroid::from_process(dataset.process(donor)));
        }
    }
    Ok(centroids.into_iter().map(|c| c.expect("filled")).collect())
}

pub fn cluster(dataset: &LabeledDataset, cfg: &ClusterConfig) -> Result<ClusterModel> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let measure = cfg.similarity.resolve(dataset)?;
    let mut centroids = seed(dataset, cfg)?;
    let mut history: Vec<Vec<usize>> = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iterations {
        let assignment = assign(dataset, &centroids, &measure)?;
        let repeated = history.last() == Some(&assignment);
        history.push(assignment);
        if repeated {
            converged = true;
            break;
        }
        centroids = update_centroids(dataset, history.last().unwrap(), cfg.k, &measure)?;
    }
    let assignment = history.last().cloned().expect("at least one stage");
    Ok(ClusterModel {
        k: cfg.k,
        centroids,
        assignment,
        iterations_run: history.len(),
        history,
        converged,
        measure,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{builtin_case_study, Vocabulary};

    fn members(model_assignment: &[usize], k: usize) -> Vec<Vec<usize>> {
        clusters_of(model_assignment, k)
    }

    #[test]
    fn first_k_seeds_are_first_rows() {
        let ds = builtin_case_study();
        let c = seed(&ds, &ClusterConfig::default()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].values(), ds.process(0).values());
        assert_eq!(c[1].values(), ds.process(1).values());

        let one = ClusterConfig { k: 1, ..ClusterConfig::default() };
        assert_eq!(seed(&ds, &one).unwrap()[0].values(), ds.process(0).values());

        let idx = ClusterConfig {
            seeding: Seeding::Indices(vec![2, 3]),
            ..ClusterConfig::default()
        };
        let c = seed(&ds, &idx).unwrap();
        assert_eq!(c[0].values(), ds.process(2).values());
        assert_eq!(c[1].values(), ds.process(3).values());
    }

    #[test]
    fn seed_errors() {
        let ds = builtin_case_study();
        let big = ClusterConfig { k: 11, ..ClusterConfig::default() };
        let err = seed(&ds, &big).unwrap_err();
        assert!(err.to_string().contains("k exceeds dataset size"));
        for bad in [vec![1, 1], vec![0, 10], vec![0]] {
            let cfg = ClusterConfig {
                seeding: Seeding::Indices(bad.clone()),
                ..ClusterConfig::default()
            };
            assert!(matches!(seed(&ds, &cfg), Err(Error::InvalidSeedIndices(_))), "{bad:?}");
        }
    }

    #[test]
    fn random_seeding_is_reproducible_and_distinct() {
        let ds = builtin_case_study();
        let cfg = ClusterConfig {
            k: 4,
            seeding: Seeding::Random(7),
            ..ClusterConfig::default()
        };
        let a = seed(&ds, &cfg).unwrap();
        let b = seed(&ds, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stage_one_assignment() {
        let ds = builtin_case_study();
        let m = Idsim::default();
        let c = seed(&ds, &ClusterConfig::default()).unwrap();
        let a = assign(&ds, &c, &m).unwrap();
        assert_eq!(members(&a, 2), vec![vec![0, 4, 6, 7, 8, 9], vec![1, 2, 3, 5]]);
        let table = similarity_table(&ds, &c, &m).unwrap();
        assert!((table[4][0] - 0.7195).abs() < 5e-4);
        assert!((table[4][1] - 0.5767).abs() < 5e-4);
    }

    #[test]
    fn mean_step_examples() {
        let ds = builtin_case_study();
        let m = Idsim::default();
        let mut a = vec![0; 10];
        a[2] = 1;
        a[3] = 1;
        let c = update_centroids(&ds, &a, 2, &m).unwrap();
        assert_eq!(c[1].values(), &[0.0, 0.0, 0.0, 2.5, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);

        let mut a = vec![1; 10];
        for i in [0, 4, 6, 7, 8, 9] {
            a[i] = 0;
        }
        let c = update_centroids(&ds, &a, 2, &m).unwrap();
        assert_eq!(c[0].values()[0], 1.5);
        assert!((c[0].values()[2] - 4.0 / 3.0).abs() < 1e-15);

        let singleton: Vec<usize> = (0..10).map(|i| usize::from(i != 0)).collect();
        let c = update_centroids(&ds, &singleton, 2, &m).unwrap();
        assert_eq!(c[0].values(), ds.process(0).values());
    }

    #[test]
    fn empty_cluster_takes_farthest_process() {
        let ds = builtin_case_study();
        let m = Idsim::default();
        let a = vec![0; 10];
        let c = update_centroids(&ds, &a, 2, &m).unwrap();
        let global = update_centroids(&ds, &a, 1, &m).unwrap().remove(0);
        let farthest = (0..10)
            .min_by(|&i, &j| {
                let si = m.score(ds.process(i).values(), global.values());
                let sj = m.score(ds.process(j).values(), global.values());
                si.total_cmp(&sj).then(i.cmp(&j))
            })
            .unwrap();
        assert_eq!(c[1].values(), ds.process(farthest).values());
    }

    #[test]
    fn case_study_trajectory() {
        let ds = builtin_case_study();
        let model = cluster(&ds, &ClusterConfig::default()).unwrap();
        let stages: Vec<_> = model.history().iter().map(|h| members(h, 2)).collect();
        assert_eq!(stages[0], vec![vec![0, 4, 6, 7, 8, 9], vec![1, 2, 3, 5]]);
        assert_eq!(stages[1], vec![vec![0, 4, 5, 6, 7, 8, 9], vec![1, 2, 3]]);
        assert_eq!(stages[2], vec![vec![0, 1, 4, 5, 6, 7, 8, 9], vec![2, 3]]);
        assert!(model.converged());
        assert_eq!(model.iterations_run(), 4);
        assert_eq!(model.clusters(), stages[2]);
    }

    #[test]
    fn budget_of_one_does_not_converge() {
        let ds = builtin_case_study();
        let cfg = ClusterConfig { max_iterations: 1, ..ClusterConfig::default() };
        let model = cluster(&ds, &cfg).unwrap();
        assert!(!model.converged());
        assert_eq!(model.history().len(), 1);
    }

    #[test]
    fn k_equals_n_converges_immediately() {
        let vocab = Vocabulary::new(["a", "b", "c"]).unwrap();
        let ps = vec![
            ProcessVector::new("x", vec![1, 0, 0]),
            ProcessVector::new("y", vec![0, 3, 0]),
            ProcessVector::new("z", vec![0, 1, 5]),
        ];
        let ds = LabeledDataset::new(vocab, ps, None).unwrap();
        let cfg = ClusterConfig {
            k: 3,
            seeding: Seeding::Indices(vec![0, 1, 2]),
            ..ClusterConfig::default()
        };
        let model = cluster(&ds, &cfg).unwrap();
        assert!(model.converged());
        assert_eq!(model.assignment(), &[0, 1, 2]);
        assert_eq!(model.iterations_run(), 2);
    }

    #[test]
    fn k_one_centroid_is_global_mean() {
        let ds = builtin_case_study();
        let cfg = ClusterConfig { k: 1, ..ClusterConfig::default() };
        let model = cluster(&ds, &cfg).unwrap();
        for s in 0..10 {
            let mean = (0..10).map(|i| ds.process(i).values()[s]).sum::<f64>() / 10.0;
            assert!((model.centroids()[0].values()[s] - mean).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let ds = builtin_case_study();
        let c = vec![Centroid::new(vec![0.0; 3]).unwrap()];
        assert!(matches!(
            assign(&ds, &c, &Idsim::default()),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(Centroid::new(vec![-1.0]).is_err());
    }

    #[test]
    fn from_parts_enforces_invariants() {
        let ds = builtin_case_study();
        let model = cluster(&ds, &ClusterConfig::default()).unwrap();
        let rebuilt = ClusterModel::from_parts(
            model.config().clone(),
            model.measure().clone(),
            model.centroids().to_vec(),
            model.history().to_vec(),
            true,
        )
        .unwrap();
        assert_eq!(rebuilt, model);
        let short = vec![model.assignment().to_vec()];
        assert!(ClusterModel::from_parts(
            model.config().clone(),
            model.measure().clone(),
            model.centroids().to_vec(),
            short,
            true,
        )
        .is_err());
    }
}
