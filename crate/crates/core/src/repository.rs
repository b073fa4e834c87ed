//! Error repositories: for every ground-truth label, one alternative label per
//! error type.
//!
//! The CSV interchange format has a fixed header
//!
//! ```text
//! ID,correctAnswer,segmentationError,similarityError,wildError,noRecognitionError
//! ```
//!
//! and the last column must be `null` or empty, since a no-recognition error
//! never carries a label.

use std::collections::HashMap;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::kind::PredictionKind;

pub const REPOSITORY_HEADER: [&str; 6] = [
    "ID",
    "correctAnswer",
    "segmentationError",
    "similarityError",
    "wildError",
    "noRecognitionError",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RepositoryError {
    #[error("malformed CSV at line {line}: {reason}")]
    MalformedCsv { line: u64, reason: String },
    #[error("duplicate {column} `{value}`")]
    DuplicateLabel { column: &'static str, value: String },
    #[error("empty {column} at line {line}")]
    EmptyLabel { line: u64, column: &'static str },
    #[error("{column} `{label}` equals the correct answer at line {line}")]
    SelfError {
        line: u64,
        column: &'static str,
        label: String,
    },
    #[error("noRecognitionError must be `null` or empty at line {line}, found `{value}`")]
    InvalidNoRecognition { line: u64, value: String },
    #[error("repository has no entries")]
    Empty,
    #[error("unknown ground truth `{0}`")]
    UnknownGroundTruth(String),
}

/// One row of the repository.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepositoryEntry {
    id: u64,
    correct_answer: String,
    segmentation_error: String,
    similarity_error: String,
    wild_error: String,
}

impl RepositoryEntry {
    /// Builds an entry, trimming labels and checking that every error label is
    /// non-empty and differs from the correct answer.
    pub fn new(
        id: u64,
        correct_answer: &str,
        segmentation_error: &str,
        similarity_error: &str,
        wild_error: &str,
    ) -> Result<Self, RepositoryError> {
        Self::validated(
            id,
            0,
            [correct_answer, segmentation_error, similarity_error, wild_error],
        )
    }

    fn validated(id: u64, line: u64, labels: [&str; 4]) -> Result<Self, RepositoryError> {
        let labels = labels.map(str::trim);
        for (label, column) in labels.iter().zip(&REPOSITORY_HEADER[1..5]) {
            if label.is_empty() {
                return Err(RepositoryError::EmptyLabel { line, column });
            }
        }
        let [correct, seg, sim, wild] = labels;
        for (label, column) in [seg, sim, wild].iter().zip(&REPOSITORY_HEADER[2..5]) {
            if *label == correct {
                return Err(RepositoryError::SelfError {
                    line,
                    column,
                    label: label.to_string(),
                });
            }
        }
        Ok(Self {
            id,
            correct_answer: correct.to_string(),
            segmentation_error: seg.to_string(),
            similarity_error: sim.to_string(),
            wild_error: wild.to_string(),
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn correct_answer(&self) -> &str {
        &self.correct_answer
    }

    /// The label sent for `kind`; `None` only for a no-recognition error.
    pub fn label_for(&self, kind: PredictionKind) -> Option<&str> {
        match kind {
            PredictionKind::Correct => Some(&self.correct_answer),
            PredictionKind::Segmentation => Some(&self.segmentation_error),
            PredictionKind::Similarity => Some(&self.similarity_error),
            PredictionKind::Wild => Some(&self.wild_error),
            PredictionKind::NoRecognition => None,
        }
    }
}

impl Serialize for RepositoryEntry {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("RepositoryEntry", 6)?;
        s.serialize_field("id", &self.id)?;
        s.serialize_field("correct_answer", &self.correct_answer)?;
        s.serialize_field("segmentation_error", &self.segmentation_error)?;
        s.serialize_field("similarity_error", &self.similarity_error)?;
        s.serialize_field("wild_error", &self.wild_error)?;
        s.serialize_field("no_recognition_error", &Option::<&str>::None)?;
        s.end()
    }
}

/// A validated, immutable error repository.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorRepository {
    name: String,
    entries: Vec<RepositoryEntry>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl ErrorRepository {
    pub fn new(name: impl Into<String>, entries: Vec<RepositoryEntry>) -> Result<Self, RepositoryError> {
        if entries.is_empty() {
            return Err(RepositoryError::Empty);
        }
        let mut index = HashMap::with_capacity(entries.len());
        let mut ids = HashMap::with_capacity(entries.len());
        for (i, entry) in entries.iter().enumerate() {
            if ids.insert(entry.id, i).is_some() {
                return Err(RepositoryError::DuplicateLabel {
                    column: "ID",
                    value: entry.id.to_string(),
                });
            }
            if index.insert(entry.correct_answer.clone(), i).is_some() {
                return Err(RepositoryError::DuplicateLabel {
                    column: "correctAnswer",
                    value: entry.correct_answer.clone(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            entries,
            index,
        })
    }

    /// Parses and validates repository CSV. Row order is preserved.
    pub fn parse(name: impl Into<String>, csv_bytes: &[u8]) -> Result<Self, RepositoryError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(csv_bytes);
        let mut records = reader.records();

        let header = match records.next() {
            Some(rec) => rec.map_err(|e| malformed(1, e))?,
            None => {
                return Err(RepositoryError::MalformedCsv {
                    line: 1,
                    reason: "missing header".into(),
                })
            }
        };
        let found: Vec<&str> = header.iter().map(str::trim).collect();
        if found != REPOSITORY_HEADER {
            return Err(RepositoryError::MalformedCsv {
                line: 1,
                reason: format!("expected header `{}`", REPOSITORY_HEADER.join(",")),
            });
        }

        let mut entries = Vec::new();
        for rec in records {
            let rec = rec.map_err(|e| malformed(0, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != REPOSITORY_HEADER.len() {
                return Err(RepositoryError::MalformedCsv {
                    line,
                    reason: format!("expected {} fields, found {}", REPOSITORY_HEADER.len(), rec.len()),
                });
            }
            let id = rec[0]
                .trim()
                .parse::<u64>()
                .map_err(|_| RepositoryError::MalformedCsv {
                    line,
                    reason: format!("ID `{}` is not a non-negative integer", &rec[0]),
                })?;
            let norec = rec[5].trim();
            if !(norec.is_empty() || norec == "null") {
                return Err(RepositoryError::InvalidNoRecognition {
                    line,
                    value: norec.to_string(),
                });
            }
            entries.push(RepositoryEntry::validated(
                id,
                line,
                [&rec[1], &rec[2], &rec[3], &rec[4]],
            )?);
        }
        Self::new(name, entries)
    }

    /// Serializes with the fixed header, `\n` line endings and `null` in the
    /// no-recognition column.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(REPOSITORY_HEADER).expect("in-memory write");
        for e in &self.entries {
            let id = e.id.to_string();
            writer
                .write_record([
                    id.as_str(),
                    &e.correct_answer,
                    &e.segmentation_error,
                    &e.similarity_error,
                    &e.wild_error,
                    "null",
                ])
                .expect("in-memory write");
        }
        writer.into_inner().expect("in-memory flush")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entries(&self) -> &[RepositoryEntry] {
        &self.entries
    }

    pub fn entry(&self, ground_truth: &str) -> Option<&RepositoryEntry> {
        self.index.get(ground_truth).map(|&i| &self.entries[i])
    }

    pub fn contains(&self, ground_truth: &str) -> bool {
        self.index.contains_key(ground_truth)
    }

    /// Resolves the label the model "predicts" for `ground_truth` under `kind`.
    pub fn lookup(&self, ground_truth: &str, kind: PredictionKind) -> Result<Option<&str>, RepositoryError> {
        self.entry(ground_truth)
            .map(|e| e.label_for(kind))
            .ok_or_else(|| RepositoryError::UnknownGroundTruth(ground_truth.to_string()))
    }

    /// All correct labels, in entry order.
    pub fn ground_truths(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.correct_answer.as_str()).collect()
    }
}

fn malformed(line: u64, err: csv::Error) -> RepositoryError {
    let line = err.position().map_or(line, |p| p.line());
    RepositoryError::MalformedCsv {
        line,
        reason: err.to_string(),
    }
}
