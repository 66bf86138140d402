//! Cell-by-cell reproduction of the ten-process worked example.
//!
//! Every printed number is recomputed from the embedded matrix and compared at
//! an absolute tolerance of `5e-4` (the tables carry four decimals). Cells in
//! [`ERRATA`] contradict the formula they were printed from; they are checked
//! against the recomputed value instead and reported as expected divergences.

use std::fmt::{self, Write as _};

use crate::detect::classify_raw;
use crate::error::Result;
use crate::kmeans::{cluster, clusters_of, seed, similarity_table, update_centroids, ClusterConfig};
use crate::reduce::{reduce_test, reduce_training, DuplicatePolicy};
use crate::trace::{builtin_case_study, ProcessVector};

pub const TOLERANCE: f64 = 5e-4;

/// Similarities to the two seed processes.
pub const TABLE_6: [[f64; 2]; 10] = [
    [1.0000, 0.6307],
    [0.6307, 1.0000],
    [0.6494, 0.7523],
    [0.5780, 0.6273],
    [0.7195, 0.5767],
    [0.6564, 0.6697],
    [0.6546, 0.6131],
    [0.6718, 0.6284],
    [0.6718, 0.6284],
    [0.9299, 0.6307],
];

/// Similarities to the stage-1 cluster means.
pub const TABLE_7: [[f64; 2]; 10] = [
    [0.7200, 0.7129],
    [0.6966, 0.7525],
    [0.7093, 0.7525],
    [0.6593, 0.7467],
    [0.7672, 0.6402],
    [0.8408, 0.5994],
    [0.7904, 0.5731],
    [0.8172, 0.6164],
    [0.8172, 0.6164],
    [0.7616, 0.6945],
];

/// Similarities to the stage-2 cluster means.
pub const TABLE_9: [[f64; 2]; 10] = [
    [0.7024, 0.6094],
    [0.6962, 0.6484],
    [0.7063, 0.7074],
    [0.6563, 0.7051],
    [0.7616, 0.5510],
    [0.8723, 0.5690],
    [0.8123, 0.5586],
    [0.8323, 0.5659],
    [0.8323, 0.5659],
    [0.7459, 0.6083],
];

/// Cluster member lists after stages 1, 2 and 3.
pub const STAGES: [(&str, [&[usize]; 2]); 3] = [
    ("Table 6 clusters", [&[0, 4, 6, 7, 8, 9], &[1, 2, 3, 5]]),
    ("Table 8 clusters", [&[0, 4, 5, 6, 7, 8, 9], &[1, 2, 3]]),
    ("Table 11 clusters", [&[0, 1, 4, 5, 6, 7, 8, 9], &[2, 3]]),
];

pub const FINAL_CLUSTERS: [&[usize]; 2] = [&[0, 1, 4, 5, 6, 7, 8, 9], &[2, 3]];

/// Per process: final-centroid similarities, cluster, neighbour, neighbour similarity.
pub const TABLE_13: [([f64; 2], usize, &str, f64); 10] = [
    ([0.7799, 0.5780], 0, "P9", 0.9299),
    ([0.7140, 0.6273], 0, "P5", 0.75),
    ([0.6775, 0.7500], 1, "P3", 0.75),
    ([0.6275, 0.7500], 1, "P2", 0.6697),
    ([0.7244, 0.5055], 0, "P9", 0.7546),
    ([0.7898, 0.5671], 0, "P7", 0.8773),
    ([0.7325, 0.5648], 0, "P5", 0.8750),
    ([0.7562, 0.5741], 0, "P5", 0.8773),
    ([0.7562, 0.5741], 0, "P5", 0.8773),
    ([0.7353, 0.5894], 0, "P0", 0.9299),
];

/// Row/column processes of the cluster-1 pairwise table.
pub const TABLE_14_PROCESSES: [usize; 8] = [0, 1, 4, 5, 6, 7, 8, 9];

pub const TABLE_14: [[f64; 8]; 8] = [
    [1.0000, 0.6307, 0.7195, 0.6564, 0.6546, 0.6718, 0.6718, 0.9299],
    [0.6307, 1.0000, 0.5767, 0.6697, 0.6131, 0.6284, 0.6284, 0.6307],
    [0.7195, 0.5767, 1.0000, 0.6932, 0.6909, 0.7182, 0.7182, 0.7546],
    [0.6564, 0.6697, 0.6932, 1.0000, 0.8750, 0.8773, 0.8773, 0.6728],
    [0.6546, 0.6131, 0.6909, 0.8750, 1.0000, 0.8750, 0.8750, 0.6707],
    [0.6718, 0.6284, 0.7182, 0.8773, 0.8750, 1.0000, 1.0000, 0.6921],
    [0.6718, 0.6284, 0.7182, 0.8773, 0.8750, 1.0000, 1.0000, 0.6921],
    [0.9299, 0.6307, 0.7546, 0.6728, 0.6707, 0.6921, 0.6921, 1.0000],
];

pub const TABLE_15_P2_P3: f64 = 0.75;

/// Per process: neighbour similarity, total, normalized feature.
pub const TABLE_16: [(f64, f64, f64); 10] = [
    (0.9299, 2.2878, 0.7626),
    (0.75, 2.0913, 0.6971),
    (0.75, 2.1775, 0.7258),
    (0.6697, 2.0472, 0.6824),
    (0.7546, 1.9845, 0.6615),
    (0.8773, 2.2342, 0.7447),
    (0.8750, 2.1723, 0.7241),
    (0.8773, 2.2076, 0.7359),
    (0.8773, 2.2076, 0.7359),
    (0.9299, 2.2546, 0.7515),
];

/// Per process: reduced similarity and distance.
pub const TABLE_17: [(f64, f64); 10] = [
    (0.7626, 0.2374),
    (0.6971, 0.3029),
    (0.7258, 0.2742),
    (0.6824, 0.3176),
    (0.6615, 0.3385),
    (0.7447, 0.2553),
    (0.7241, 0.2759),
    (0.7359, 0.2641),
    (0.7359, 0.2641),
    (0.7515, 0.2485),
];

/// The two new processes with their printed neighbour, similarity, distance and class.
pub const TABLE_18_19: [(&str, [u64; 10], &str, f64, f64, &str); 2] = [
    ("Ptest", [0, 0, 0, 4, 1, 0, 0, 0, 0, 0], "P3", 1.0, 0.0, "Normal"),
    ("Pnew", [1, 2, 0, 1, 0, 0, 0, 0, 0, 1], "P4", 1.0, 0.0, "Abnormal"),
];

/// A printed cell that disagrees with its own inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Erratum {
    pub table: &'static str,
    pub row: &'static str,
    pub column: &'static str,
    pub printed: f64,
    pub corrected: f64,
}

/// P1 and P3 have their nearest-neighbour similarities swapped in the
/// neighbour table; the error carries into the totals and reduced values.
pub const ERRATA: [Erratum; 12] = [
    Erratum { table: "Table 13", row: "P1", column: "nn_sim", printed: 0.75, corrected: 0.6697 },
    Erratum { table: "Table 13", row: "P3", column: "nn_sim", printed: 0.6697, corrected: 0.75 },
    Erratum { table: "Table 16", row: "P1", column: "nn_sim", printed: 0.75, corrected: 0.6697 },
    Erratum { table: "Table 16", row: "P1", column: "total", printed: 2.0913, corrected: 2.0110 },
    Erratum { table: "Table 16", row: "P3", column: "nn_sim", printed: 0.6697, corrected: 0.75 },
    Erratum { table: "Table 16", row: "P3", column: "total", printed: 2.0472, corrected: 2.1275 },
    Erratum { table: "Table 17", row: "P1", column: "similarity", printed: 0.6971, corrected: 0.6703 },
    Erratum { table: "Table 17", row: "P1", column: "distance", printed: 0.3029, corrected: 0.3297 },
    Erratum { table: "Table 17", row: "P3", column: "similarity", printed: 0.6824, corrected: 0.7092 },
    Erratum { table: "Table 17", row: "P3", column: "distance", printed: 0.3176, corrected: 0.2908 },
    Erratum { table: "Table 16", row: "P1", column: "normalized", printed: 0.6971, corrected: 0.6703 },
    Erratum { table: "Table 16", row: "P3", column: "normalized", printed: 0.6824, corrected: 0.7092 },
];

pub fn erratum(table: &str, row: &str, column: &str) -> Option<&'static Erratum> {
    ERRATA
        .iter()
        .find(|e| e.table == table && e.row == row && e.column == column)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    ExpectedDivergence,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::ExpectedDivergence => "EXPECTED-DIVERGENCE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellValue::Number(v) => write!(f, "{v:.6}"),
            CellValue::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellCheck {
    pub table: &'static str,
    pub row: String,
    pub column: String,
    pub computed: CellValue,
    pub printed: CellValue,
    /// Replacement value for cells listed in [`ERRATA`].
    pub corrected: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageCheck {
    pub label: &'static str,
    pub computed: Vec<Vec<usize>>,
    pub printed: Vec<Vec<usize>>,
}

impl StageCheck {
    pub fn matches(&self) -> bool {
        self.computed == self.printed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseStudyReport {
    pub cells: Vec<CellCheck>,
    pub stages: Vec<StageCheck>,
    pub converged: bool,
    pub iterations_run: usize,
}

impl CaseStudyReport {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(|c| c.verdict != Verdict::Fail)
            && self.stages.iter().all(StageCheck::matches)
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.verdict == Verdict::Fail).count()
            + self.stages.iter().filter(|s| !s.matches()).count()
    }

    pub fn cells_of<'a>(&'a self, table: &'a str) -> impl Iterator<Item = &'a CellCheck> + 'a {
        self.cells.iter().filter(move |c| c.table == table)
    }

    pub fn cell(&self, table: &str, row: &str, column: &str) -> Option<&CellCheck> {
        self.cells
            .iter()
            .find(|c| c.table == table && c.row == row && c.column == column)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "case study reproduction (tolerance {TOLERANCE:e})");
        let _ = writeln!(
            out,
            "k-means: {} stages, converged = {}",
            self.iterations_run, self.converged
        );
        for s in &self.stages {
            let verdict = if s.matches() { "PASS" } else { "FAIL" };
            let _ = writeln!(
                out,
                "{:<18} computed={} printed={} {verdict}",
                s.label,
                fmt_clusters(&s.computed),
                fmt_clusters(&s.printed)
            );
        }
        let mut table = "";
        for c in &self.cells {
            if c.table != table {
                table = c.table;
                let _ = writeln!(out, "-- {table}");
            }
            let corrected = c
                .corrected
                .map(|v| format!(" corrected={v:.4}"))
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{:<9} {:<5} {:<12} computed={:<10} printed={:<8}{corrected} tol={TOLERANCE:e} {}",
                c.table, c.row, c.column, c.computed, c.printed, c.verdict
            );
        }
        let divergent = self
            .cells
            .iter()
            .filter(|c| c.verdict == Verdict::ExpectedDivergence)
            .count();
        let _ = writeln!(
            out,
            "summary: {} cells, {} stage checks, {} expected divergences, {} failures => {}",
            self.cells.len(),
            self.stages.len(),
            divergent,
            self.failures(),
            if self.passed() { "PASS" } else { "FAIL" }
        );
        out
    }
}

fn fmt_clusters(clusters: &[Vec<usize>]) -> String {
    clusters
        .iter()
        .map(|c| format!("{c:?}"))
        .collect::<Vec<_>>()
        .join("/")
}

struct Collector {
    cells: Vec<CellCheck>,
}

impl Collector {
    fn number(&mut self, table: &'static str, row: &str, column: &str, computed: f64, printed: f64) {
        let (corrected, verdict) = match erratum(table, row, column) {
            Some(e) => {
                let verdict = if (computed - e.corrected).abs() <= TOLERANCE
                    && (computed - printed).abs() > TOLERANCE
                {
                    Verdict::ExpectedDivergence
                } else {
                    Verdict::Fail
                };
                (Some(e.corrected), verdict)
            }
            None if (computed - printed).abs() <= TOLERANCE => (None, Verdict::Pass),
            None => (None, Verdict::Fail),
        };
        self.cells.push(CellCheck {
            table,
            row: row.to_string(),
            column: column.to_string(),
            computed: CellValue::Number(computed),
            printed: CellValue::Number(printed),
            corrected,
            verdict,
        });
    }

    fn text(&mut self, table: &'static str, row: &str, column: &str, computed: &str, printed: &str) {
        self.cells.push(CellCheck {
            table,
            row: row.to_string(),
            column: column.to_string(),
            computed: CellValue::Text(computed.to_string()),
            printed: CellValue::Text(printed.to_string()),
            corrected: None,
            verdict: if computed == printed {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        });
    }
}

fn printed_clusters(lists: &[&[usize]]) -> Vec<Vec<usize>> {
    lists.iter().map(|c| c.to_vec()).collect()
}

/// Recomputes every checked table of the worked example.
pub fn reproduce() -> Result<CaseStudyReport> {
    let ds = builtin_case_study();
    let cfg = ClusterConfig::default();
    let model = cluster(&ds, &cfg)?;
    let measure = model.measure();
    let mut col = Collector { cells: Vec::new() };
    let row = |i: usize| format!("P{i}");

    let seeds = seed(&ds, &cfg)?;
    let stage1 = update_centroids(&ds, &model.history()[0], cfg.k, measure)?;
    let stage2 = update_centroids(&ds, &model.history()[1], cfg.k, measure)?;
    for (table, centroids, printed) in [
        ("Table 6", &seeds, &TABLE_6),
        ("Table 7", &stage1, &TABLE_7),
        ("Table 9", &stage2, &TABLE_9),
    ] {
        let sims = similarity_table(&ds, centroids, measure)?;
        for i in 0..10 {
            for j in 0..2 {
                col.number(table, &row(i), &format!("cluster{}", j + 1), sims[i][j], printed[i][j]);
            }
        }
    }

    let mut stages: Vec<StageCheck> = STAGES
        .iter()
        .enumerate()
        .map(|(s, (label, printed))| StageCheck {
            label,
            computed: model
                .history()
                .get(s)
                .map(|h| clusters_of(h, cfg.k))
                .unwrap_or_default(),
            printed: printed_clusters(printed),
        })
        .collect();
    stages.push(StageCheck {
        label: "Table 12 final",
        computed: model.clusters(),
        printed: printed_clusters(&FINAL_CLUSTERS),
    });

    let features = reduce_training(&model, &ds, DuplicatePolicy::Skip)?;
    for (i, f) in features.iter().enumerate() {
        let (sims, allotment, nn, nn_sim) = TABLE_13[i];
        let r = row(i);
        col.number("Table 13", &r, "cluster1", f.cluster_sims[0], sims[0]);
        col.number("Table 13", &r, "cluster2", f.cluster_sims[1], sims[1]);
        col.text(
            "Table 13",
            &r,
            "cluster",
            &model.assignment()[i].to_string(),
            &allotment.to_string(),
        );
        col.text("Table 13", &r, "nn", &f.nn_id, nn);
        col.number("Table 13", &r, "nn_sim", f.nn_sim, nn_sim);
    }

    for (a, &pa) in TABLE_14_PROCESSES.iter().enumerate() {
        for (b, &pb) in TABLE_14_PROCESSES.iter().enumerate().skip(a + 1) {
            let s = measure.similarity(ds.process(pa).values(), ds.process(pb).values())?;
            col.number("Table 14", &row(pa), &row(pb), s.value(), TABLE_14[a][b]);
        }
    }
    let s = measure.similarity(ds.process(2).values(), ds.process(3).values())?;
    col.number("Table 15", "P2", "P3", s.value(), TABLE_15_P2_P3);

    for (i, f) in features.iter().enumerate() {
        let r = row(i);
        let (nn_sim, total, normalized) = TABLE_16[i];
        col.number("Table 16", &r, "nn_sim", f.nn_sim, nn_sim);
        col.number("Table 16", &r, "total", f.total, total);
        col.number("Table 16", &r, "normalized", f.feature, normalized);
        let (similarity, distance) = TABLE_17[i];
        col.number("Table 17", &r, "similarity", f.feature, similarity);
        col.number("Table 17", &r, "distance", f.distance, distance);
    }

    for (id, counts, nn, sim, dist, class) in TABLE_18_19 {
        let p = ProcessVector::new(id, counts.to_vec());
        let pred = classify_raw(&p, &ds, measure)?;
        col.text("Table 18", id, "nn", &pred.nn_id, nn);
        col.number("Table 18", id, "similarity", pred.score, sim);
        col.number("Table 18", id, "distance", 1.0 - pred.score, dist);
        col.text("Table 19", id, "class", pred.predicted.as_str(), class);
        // The reduced view of a new process keeps the same global neighbour.
        let reduced = reduce_test(&p, &model, &ds)?;
        col.text("Table 18", id, "reduced_nn", &reduced.nn_id, nn);
    }

    Ok(CaseStudyReport {
        cells: col.cells,
        stages,
        converged: model.converged(),
        iterations_run: model.iterations_run(),
    })
}
