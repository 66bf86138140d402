//! Vocabulary and process-vector data model, plus CSV ingestion.
//!
//! The interchange format is a UTF-8 CSV matrix: the header starts with `id`,
//! continues with one column per system call and optionally ends with `class`.
//! Each data row holds a process id, one nonnegative integer count per call
//! and, for labeled files, a `normal`/`abnormal` token (case-insensitive).

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class label of a process. `Abnormal` is the positive class in evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Normal,
    Abnormal,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "Normal",
            Label::Abnormal => "Abnormal",
        }
    }

    pub fn inverted(self) -> Label {
        match self {
            Label::Normal => Label::Abnormal,
            Label::Abnormal => Label::Normal,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("normal") {
            Ok(Label::Normal)
        } else if s.eq_ignore_ascii_case("abnormal") {
            Ok(Label::Abnormal)
        } else {
            Err(s.to_string())
        }
    }
}

/// Ordered, duplicate-free list of system-call names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    names: Vec<String>,
}

impl Vocabulary {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let mut seen = HashSet::with_capacity(names.len());
        for name in &names {
            if name.trim().is_empty() {
                return Err(Error::InvalidCallName(name.clone()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateCall(name.clone()));
            }
        }
        Ok(Self { names })
    }

    /// Drops every name in `exclusion_list`, keeping the order of the rest.
    pub fn normalize<S: AsRef<str>>(raw_names: &[S], exclusion_list: &[S]) -> Result<Self> {
        if raw_names.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let excluded: HashSet<&str> = exclusion_list.iter().map(AsRef::as_ref).collect();
        Self::new(
            raw_names
                .iter()
                .map(AsRef::as_ref)
                .filter(|name| !excluded.contains(name))
                .map(str::to_string),
        )
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Fails unless `other` lists exactly the same calls in the same order.
    pub fn ensure_same(&self, other: &Vocabulary) -> Result<()> {
        if self == other {
            return Ok(());
        }
        if let Some(unknown) = other.names.iter().find(|n| self.index_of(n).is_none()) {
            return Err(Error::VocabularyMismatch(format!(
                "system call {unknown:?} is not in the training vocabulary"
            )));
        }
        if let Some(missing) = self.names.iter().find(|n| other.index_of(n).is_none()) {
            return Err(Error::VocabularyMismatch(format!(
                "system call {missing:?} is missing"
            )));
        }
        Err(Error::VocabularyMismatch(
            "system call columns are in a different order".to_string(),
        ))
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        Vocabulary::new(names)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.names
    }
}

/// System-call frequency counts of one process.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessVector {
    id: String,
    counts: Vec<u64>,
    values: Vec<f64>,
}

impl ProcessVector {
    pub fn new(id: impl Into<String>, counts: Vec<u64>) -> Self {
        let values = counts.iter().map(|&c| c as f64).collect();
        Self {
            id: id.into(),
            counts,
            values,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// The counts as floating point, the form every similarity computation uses.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// A set of processes sharing one vocabulary, optionally labeled.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    vocabulary: Vocabulary,
    processes: Vec<ProcessVector>,
    labels: Option<Vec<Label>>,
}

impl LabeledDataset {
    pub fn new(
        vocabulary: Vocabulary,
        processes: Vec<ProcessVector>,
        labels: Option<Vec<Label>>,
    ) -> Result<Self> {
        let mut ids = HashSet::with_capacity(processes.len());
        for p in &processes {
            if p.len() != vocabulary.len() {
                return Err(Error::LengthMismatch {
                    expected: vocabulary.len(),
                    found: p.len(),
                });
            }
            if !ids.insert(p.id()) {
                return Err(Error::DuplicateId(p.id().to_string()));
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != processes.len() {
                return Err(Error::LabelCount {
                    labels: labels.len(),
                    processes: processes.len(),
                });
            }
        }
        Ok(Self {
            vocabulary,
            processes,
            labels,
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn processes(&self) -> &[ProcessVector] {
        &self.processes
    }

    pub fn process(&self, index: usize) -> &ProcessVector {
        &self.processes[index]
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn is_labeled(&self) -> bool {
        self.labels.is_some()
    }

    pub fn label(&self, index: usize) -> Option<Label> {
        self.labels.as_ref().map(|l| l[index])
    }

    pub fn require_labels(&self) -> Result<&[Label]> {
        self.labels().ok_or(Error::MissingLabels)
    }

    pub fn len(&self) -> usize {
        self.processes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.processes.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.processes.iter().position(|p| p.id() == id)
    }

    /// Same processes with labels removed.
    pub fn without_labels(&self) -> LabeledDataset {
        Self {
            labels: None,
            ..self.clone()
        }
    }

    /// Writes the dataset in the canonical CSV layout.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = Vec::with_capacity(self.dims() + 2);
        header.push("id");
        header.extend(self.vocabulary.names().iter().map(String::as_str));
        if self.is_labeled() {
            header.push("class");
        }
        out.write_record(&header).map_err(csv_error)?;
        for (i, p) in self.processes.iter().enumerate() {
            let mut row = Vec::with_capacity(header.len());
            row.push(p.id().to_string());
            row.extend(p.counts().iter().map(u64::to_string));
            if let Some(label) = self.label(i) {
                row.push(label.to_string());
            }
            out.write_record(&row).map_err(csv_error)?;
        }
        out.flush()
            .map_err(|e| Error::Csv(format!("flush failed: {e}")))?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file)
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Csv(e.to_string())
}

/// Loads a process matrix from `path`.
///
/// With `expect_labels` the header must end in a `class` column. Without it, a
/// trailing `class` column is accepted and ignored, so labeled files can be fed
/// to unlabeled consumers.
pub fn load_matrix(path: impl AsRef<Path>, expect_labels: bool) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrix(file, expect_labels)
}

pub fn read_matrix<R: Read>(reader: R, expect_labels: bool) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        Some(h) => h.map_err(csv_error)?,
        None => return Err(Error::BadHeader("file is empty".to_string())),
    };
    let cells: Vec<&str> = header.iter().collect();
    match cells.first() {
        Some(first) if first.trim_start_matches('\u{feff}').eq_ignore_ascii_case("id") => {}
        _ => {
            return Err(Error::BadHeader(
                "first header cell must be \"id\"".to_string(),
            ))
        }
    }
    let has_class = cells.len() > 1 && cells[cells.len() - 1].eq_ignore_ascii_case("class");
    if expect_labels && !has_class {
        return Err(Error::BadHeader(
            "labeled matrix needs a trailing \"class\" column".to_string(),
        ));
    }
    let call_end = if has_class { cells.len() - 1 } else { cells.len() };
    let vocabulary = Vocabulary::new(cells[1..call_end].iter().copied())?;
    let width = cells.len();

    let mut processes = Vec::new();
    let mut labels = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(Error::RaggedRow {
                line,
                expected: width,
                found: record.len(),
            });
        }
        let id = &record[0];
        if id.is_empty() {
            return Err(Error::Csv(format!("empty process id at line {line}")));
        }
        let mut counts = Vec::with_capacity(vocabulary.len());
        for (col, cell) in record.iter().enumerate().take(call_end).skip(1) {
            let count = cell.parse::<u64>().map_err(|_| Error::InvalidCount {
                line,
                column: vocabulary.names()[col - 1].clone(),
                value: cell.to_string(),
            })?;
            counts.push(count);
        }
        if has_class && expect_labels {
            let token = &record[width - 1];
            let label = token.parse::<Label>().map_err(|token| Error::UnknownLabel {
                line,
                token,
            })?;
            labels.push(label);
        }
        processes.push(ProcessVector::new(id, counts));
    }

    LabeledDataset::new(vocabulary, processes, expect_labels.then_some(labels))
}

/// Column names of the ten-call case-study matrix.
pub const CASE_STUDY_COLUMNS: [&str; 10] = ["S1", "S2", "S3", "S4", "S5", "S6", "S7", "S8", "S9", "S10"];

/// The system calls behind columns S1..S10 of the case-study matrix.
pub const CASE_STUDY_CALLS: [&str; 10] = [
    "fchdir", "login", "pipe", "logout", "munmap", "sysinfo", "audition", "chdir", "pathconf",
    "boom",
];

const CASE_STUDY_ROWS: [[u64; 10]; 10] = [
    [1, 1, 0, 1, 1, 1, 1, 0, 0, 1],
    [0, 0, 1, 1, 1, 6, 0, 0, 0, 0],
    [0, 0, 0, 1, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 4, 1, 0, 0, 0, 0, 0],
    [1, 2, 0, 1, 0, 0, 0, 0, 0, 1],
    [2, 2, 1, 1, 1, 0, 0, 1, 1, 1],
    [2, 2, 4, 1, 1, 0, 0, 3, 1, 1],
    [2, 2, 2, 1, 1, 0, 0, 0, 1, 1],
    [2, 2, 2, 1, 1, 0, 0, 0, 1, 1],
    [1, 1, 0, 1, 1, 0, 1, 0, 0, 1],
];

/// The embedded ten-process case-study matrix: P0..P3 normal, P4..P9 abnormal.
pub fn builtin_case_study() -> LabeledDataset {
    let vocabulary = Vocabulary::new(CASE_STUDY_COLUMNS).expect("static vocabulary is valid");
    let processes = CASE_STUDY_ROWS
        .iter()
        .enumerate()
        .map(|(i, row)| ProcessVector::new(format!("P{i}"), row.to_vec()))
        .collect();
    let labels = (0..10)
        .map(|i| if i < 4 { Label::Normal } else { Label::Abnormal })
        .collect();
    LabeledDataset::new(vocabulary, processes, Some(labels)).expect("static fixture is valid")
}

/// The retained 50-call DARPA 98 BSM vocabulary.
pub const DARPA_BSM_CALLS: [&str; 50] = [
    "access", "audit", "auditon", "chdir", "chmod", "chown", "close", "creat", "execve", "exit",
    "fchdir", "fchown", "fcntl", "fork", "fork1", "getaudit", "getmsg", "ioctl", "kill", "link",
    "login", "logout", "lstat", "memcntl", "mkdir", "mmap", "munmap", "oldnice", "oldsetgid",
    "oldsetuid", "oldutime", "open", "pathdonf", "pipe", "putmsg", "readlink", "rename", "rmdir",
    "setaudit", "setegid", "seteuid", "setgroups", "setpgrp", "setrlimit", "stat", "statvfs",
    "su", "sysinfo", "unlink", "vfork",
];

/// Calls dropped from the raw 60-call list as prefix/suffix variants of retained ones.
pub const DARPA_BSM_EXCLUDED: [&str; 10] = [
    "audition", "setuid", "setgid", "nice", "utime", "ace", "crew", "boom", "dog", "eon",
];

/// The raw 60-call list: the retained calls followed by the excluded ones.
pub fn darpa_bsm_raw_calls() -> Vec<&'static str> {
    DARPA_BSM_CALLS
        .iter()
        .chain(DARPA_BSM_EXCLUDED.iter())
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_of(text: &str, labels: bool) -> Result<LabeledDataset> {
        read_matrix(text.as_bytes(), labels)
    }

    #[test]
    fn case_study_rows_and_labels() {
        let ds = builtin_case_study();
        assert_eq!(ds.len(), 10);
        assert_eq!(ds.process(1).counts(), &[0, 0, 1, 1, 1, 6, 0, 0, 0, 0]);
        assert_eq!(ds.process(7).counts(), ds.process(8).counts());
        let labels = ds.labels().unwrap();
        assert_eq!(labels.iter().filter(|l| **l == Label::Normal).count(), 4);
        assert_eq!(labels.iter().filter(|l| **l == Label::Abnormal).count(), 6);
    }

    #[test]
    fn case_study_csv_first_row() {
        let mut buf = Vec::new();
        builtin_case_study().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("id,S1,S2,S3,S4,S5,S6,S7,S8,S9,S10,class"));
        assert_eq!(lines.next(), Some("P0,1,1,0,1,1,1,1,0,0,1,Normal"));
    }

    #[test]
    fn header_only_is_empty_dataset() {
        let ds = csv_of("id,a,b,class\n", true).unwrap();
        assert!(ds.is_empty());
        assert_eq!(ds.dims(), 2);
    }

    #[test]
    fn ragged_row_rejected() {
        let text = "id,S1,S2,S3,S4,S5,S6,S7,S8,S9,S10\nP0,1,1,0,1,1,1,1,0,0\n";
        let err = csv_of(text, false).unwrap_err();
        assert!(matches!(err, Error::RaggedRow { expected: 11, found: 10, .. }), "{err}");
        assert!(err.to_string().contains("ragged row"));
    }

    #[test]
    fn bad_counts_rejected() {
        for bad in ["-1", "1.5", "x", ""] {
            let text = format!("id,a,b\nP0,1,{bad}\n");
            let err = csv_of(&text, false).unwrap_err();
            assert_eq!(err.code(), "invalid-count", "{bad:?}: {err}");
        }
    }

    #[test]
    fn duplicate_id_rejected() {
        let err = csv_of("id,a\nP0,1\nP0,2\n", false).unwrap_err();
        assert!(matches!(err, Error::DuplicateId(ref id) if id == "P0"));
    }

    #[test]
    fn labels_case_insensitive_and_unknown_rejected() {
        let ds = csv_of("id,a,class\nP0,1,NORMAL\nP1,0,abnormal\n", true).unwrap();
        assert_eq!(ds.labels().unwrap(), &[Label::Normal, Label::Abnormal]);
        let err = csv_of("id,a,class\nP0,1,benign\n", true).unwrap_err();
        assert!(matches!(err, Error::UnknownLabel { ref token, .. } if token == "benign"));
    }

    #[test]
    fn missing_class_column_when_labels_expected() {
        assert_eq!(csv_of("id,a\nP0,1\n", true).unwrap_err().code(), "bad-header");
    }

    #[test]
    fn unlabeled_mode_ignores_class_column() {
        let ds = csv_of("id,a,class\nP0,1,whatever\n", false).unwrap();
        assert!(!ds.is_labeled());
        assert_eq!(ds.dims(), 1);
    }

    #[test]
    fn missing_file() {
        let err = load_matrix("/definitely/not/here.csv", true).unwrap_err();
        assert_eq!(err.code(), "missing-file");
    }

    #[test]
    fn vocabulary_reduction_60_to_50() {
        let raw = darpa_bsm_raw_calls();
        assert_eq!(raw.len(), 60);
        let vocab = Vocabulary::normalize(&raw, &DARPA_BSM_EXCLUDED.to_vec()).unwrap();
        assert_eq!(vocab.len(), 50);
        assert_eq!(vocab.names(), DARPA_BSM_CALLS.map(String::from).as_slice());
    }

    #[test]
    fn vocabulary_identity_and_empty() {
        let names = ["a", "b", "c"];
        let none: [&str; 0] = [];
        let v = Vocabulary::normalize(&names[..], &none[..]).unwrap();
        assert_eq!(v.names(), &["a", "b", "c"]);
        let err = Vocabulary::normalize(&names[..], &names[..]).unwrap_err();
        assert!(matches!(err, Error::EmptyVocabulary));
        assert_eq!(err.to_string(), "empty vocabulary");
    }

    #[test]
    fn vocabulary_rejects_duplicates() {
        assert!(matches!(
            Vocabulary::new(["a", "a"]),
            Err(Error::DuplicateCall(_))
        ));
    }

    #[test]
    fn vocabulary_mismatch_reports_unknown_call() {
        let train = Vocabulary::new(["a", "b"]).unwrap();
        let test = Vocabulary::new(["a", "zz"]).unwrap();
        let msg = train.ensure_same(&test).unwrap_err().to_string();
        assert!(msg.contains("\"zz\""), "{msg}");
        let swapped = Vocabulary::new(["b", "a"]).unwrap();
        assert!(train.ensure_same(&swapped).is_err());
    }
}
