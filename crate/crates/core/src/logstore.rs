//! Append-only action log with CSV export and import.
//!
//! Every wizard action is one row. Files are named `<session_id>.log.csv` and
//! are written one flushed row at a time, so a crash loses at most the row in
//! flight.

use std::collections::HashMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::accuracy::{AccuracyState, Percent2};
use crate::kind::PredictionKind;
use crate::session::PredictionEvent;

pub const LOG_HEADER: [&str; 13] = [
    "seq",
    "timestamp_ms",
    "session_id",
    "action",
    "trial_index",
    "ground_truth",
    "kind",
    "predicted_label",
    "confidence",
    "correct",
    "accuracy_after",
    "target_accuracy",
    "mode",
];

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("storage failure: {0}")]
    StorageFailure(#[from] io::Error),
    #[error("malformed CSV at line {line}: {reason}")]
    MalformedCsv { line: u64, reason: String },
    #[error("log header does not match `{}`", LOG_HEADER.join(","))]
    HeaderMismatch,
    #[error("record {seq} is inconsistent with action {action}: {reason}")]
    InvalidRecord {
        seq: u64,
        action: Action,
        reason: &'static str,
    },
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("record {seq} logs accuracy {logged} but replay gives {replayed}")]
    AccuracyMismatch {
        seq: u64,
        logged: Percent2,
        replayed: Percent2,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    GroundTruthSelected,
    ConfidenceSet,
    PredictionRecorded,
    SessionStarted,
    SessionEnded,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::GroundTruthSelected => "ground_truth_selected",
            Action::ConfidenceSet => "confidence_set",
            Action::PredictionRecorded => "prediction_recorded",
            Action::SessionStarted => "session_started",
            Action::SessionEnded => "session_ended",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Action::GroundTruthSelected,
            Action::ConfidenceSet,
            Action::PredictionRecorded,
            Action::SessionStarted,
            Action::SessionEnded,
        ]
        .into_iter()
        .find(|a| a.as_str() == s)
        .ok_or_else(|| format!("unknown action `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub seq: u64,
    pub timestamp_ms: i64,
    pub session_id: String,
    pub action: Action,
    pub trial_index: Option<u32>,
    pub ground_truth: Option<String>,
    pub kind: Option<PredictionKind>,
    pub predicted_label: Option<String>,
    pub confidence: Option<u8>,
    pub correct: Option<bool>,
    pub accuracy_after: Option<Percent2>,
    pub target_accuracy: f64,
    pub mode: String,
}

impl ActionRecord {
    /// A record with only the columns every row carries.
    pub fn new(action: Action, timestamp_ms: i64, session_id: &str, target_accuracy: f64, mode: &str) -> Self {
        Self {
            seq: 0,
            timestamp_ms,
            session_id: session_id.to_string(),
            action,
            trial_index: None,
            ground_truth: None,
            kind: None,
            predicted_label: None,
            confidence: None,
            correct: None,
            accuracy_after: None,
            target_accuracy,
            mode: mode.to_string(),
        }
    }

    /// Checks that the populated columns fit the action type.
    pub fn validate(&self) -> Result<(), LogError> {
        let fail = |reason| {
            Err(LogError::InvalidRecord {
                seq: self.seq,
                action: self.action,
                reason,
            })
        };
        let prediction_fields = self.kind.is_some()
            || self.predicted_label.is_some()
            || self.correct.is_some()
            || self.accuracy_after.is_some();
        if self.confidence.is_some_and(|c| c > 100) {
            return fail("confidence above 100");
        }
        if !(0.0..=100.0).contains(&self.target_accuracy) {
            return fail("target accuracy outside [0, 100]");
        }
        match self.action {
            Action::PredictionRecorded => {
                let Some(kind) = self.kind else {
                    return fail("prediction without kind");
                };
                if self.trial_index.is_none() || self.ground_truth.is_none() {
                    return fail("prediction without trial index or ground truth");
                }
                if self.correct != Some(kind == PredictionKind::Correct) {
                    return fail("correct flag disagrees with kind");
                }
                if self.accuracy_after.is_none() {
                    return fail("prediction without accuracy");
                }
                let silent = kind == PredictionKind::NoRecognition;
                if silent != self.predicted_label.is_none() || silent != self.confidence.is_none() {
                    return fail("label and confidence must be absent exactly for no-recognition");
                }
            }
            Action::GroundTruthSelected => {
                if prediction_fields || self.confidence.is_some() {
                    return fail("prediction fields on a ground-truth selection");
                }
                if self.ground_truth.is_none() || self.trial_index.is_none() {
                    return fail("ground-truth selection without label or trial index");
                }
            }
            Action::ConfidenceSet => {
                if prediction_fields {
                    return fail("prediction fields on a confidence change");
                }
                if self.confidence.is_none() || self.trial_index.is_none() {
                    return fail("confidence change without value or trial index");
                }
            }
            Action::SessionStarted | Action::SessionEnded => {
                if prediction_fields
                    || self.confidence.is_some()
                    || self.trial_index.is_some()
                    || self.ground_truth.is_some()
                {
                    return fail("trial fields on a session boundary");
                }
            }
        }
        Ok(())
    }

    fn to_fields(&self) -> [String; 13] {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(ToString::to_string).unwrap_or_default()
        }
        [
            self.seq.to_string(),
            self.timestamp_ms.to_string(),
            self.session_id.clone(),
            self.action.to_string(),
            opt(&self.trial_index),
            opt(&self.ground_truth),
            opt(&self.kind),
            opt(&self.predicted_label),
            opt(&self.confidence),
            opt(&self.correct),
            opt(&self.accuracy_after),
            self.target_accuracy.to_string(),
            self.mode.clone(),
        ]
    }

    fn from_fields(rec: &csv::StringRecord, line: u64) -> Result<Self, LogError> {
        fn bad(line: u64, column: &str, value: &str) -> LogError {
            LogError::MalformedCsv {
                line,
                reason: format!("invalid {column} `{value}`"),
            }
        }
        fn req<T: FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T, LogError> {
            rec[i].parse().map_err(|_| bad(line, LOG_HEADER[i], &rec[i]))
        }
        fn opt<T: FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<Option<T>, LogError> {
            if rec[i].is_empty() {
                Ok(None)
            } else {
                req(rec, i, line).map(Some)
            }
        }
        let text = |i: usize| (!rec[i].is_empty()).then(|| rec[i].to_string());
        let target_accuracy: f64 = req(rec, 11, line)?;
        if !target_accuracy.is_finite() {
            return Err(bad(line, LOG_HEADER[11], &rec[11]));
        }
        Ok(Self {
            seq: req(rec, 0, line)?,
            timestamp_ms: req(rec, 1, line)?,
            session_id: rec[2].to_string(),
            action: req(rec, 3, line)?,
            trial_index: opt(rec, 4, line)?,
            ground_truth: text(5),
            kind: opt(rec, 6, line)?,
            predicted_label: text(7),
            confidence: opt(rec, 8, line)?,
            correct: opt(rec, 9, line)?,
            accuracy_after: opt(rec, 10, line)?,
            target_accuracy,
            mode: rec[12].to_string(),
        })
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .has_headers(false)
        .from_writer(w)
}

fn header_bytes() -> Vec<u8> {
    let mut w = csv_writer(Vec::new());
    w.write_record(LOG_HEADER).expect("in-memory write");
    w.into_inner().expect("in-memory flush")
}

fn row_bytes(record: &ActionRecord) -> Vec<u8> {
    let mut w = csv_writer(Vec::new());
    w.write_record(record.to_fields()).expect("in-memory write");
    w.into_inner().expect("in-memory flush")
}

/// Renders records as log CSV. Deterministic in the record list.
pub fn export_csv(records: &[ActionRecord]) -> Vec<u8> {
    let mut out = header_bytes();
    for r in records {
        out.extend(row_bytes(r));
    }
    out
}

/// Findings that do not prevent an import but deserve a look.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    /// Sequence numbers that did not follow their predecessor by exactly one.
    pub out_of_order_seq: Vec<u64>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.out_of_order_seq.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportedLog {
    pub records: Vec<ActionRecord>,
    pub report: ValidationReport,
}

/// Parses log CSV. The header must match exactly; every record is
/// re-validated against its action type.
pub fn import_csv(bytes: &[u8]) -> Result<ImportedLog, LogError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut rows = reader.records();
    let header = match rows.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(csv_error(e)),
        None => return Err(LogError::HeaderMismatch),
    };
    if header.iter().ne(LOG_HEADER) {
        return Err(LogError::HeaderMismatch);
    }

    let mut records = Vec::new();
    let mut report = ValidationReport::default();
    for row in rows {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != LOG_HEADER.len() {
            return Err(LogError::MalformedCsv {
                line,
                reason: format!("expected {} fields, found {}", LOG_HEADER.len(), row.len()),
            });
        }
        let record = ActionRecord::from_fields(&row, line)?;
        record.validate()?;
        let expected = records.last().map_or(1, |r: &ActionRecord| r.seq + 1);
        if record.seq != expected {
            report.out_of_order_seq.push(record.seq);
        }
        records.push(record);
    }
    Ok(ImportedLog { records, report })
}

fn csv_error(e: csv::Error) -> LogError {
    LogError::MalformedCsv {
        line: e.position().map_or(0, |p| p.line()),
        reason: e.to_string(),
    }
}

/// The log of one session: in memory, optionally mirrored to a file.
#[derive(Debug)]
pub struct SessionLog {
    session_id: String,
    records: Vec<ActionRecord>,
    file: Option<File>,
}

impl SessionLog {
    pub fn in_memory(session_id: impl Into<String>) -> Self {
        Self {
            session_id: session_id.into(),
            records: Vec::new(),
            file: None,
        }
    }

    /// Creates `<dir>/<session_id>.log.csv` and writes the header.
    pub fn create_file(dir: &Path, session_id: impl Into<String>) -> Result<Self, LogError> {
        let session_id = session_id.into();
        let mut file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(log_path(dir, &session_id))?;
        file.write_all(&header_bytes())?;
        file.flush()?;
        Ok(Self {
            session_id,
            records: Vec::new(),
            file: Some(file),
        })
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    /// Validates and appends `record`, assigning the next sequence number.
    pub fn append(&mut self, mut record: ActionRecord) -> Result<u64, LogError> {
        record.seq = self.records.len() as u64 + 1;
        if record.session_id != self.session_id {
            return Err(LogError::InvalidRecord {
                seq: record.seq,
                action: record.action,
                reason: "record belongs to another session",
            });
        }
        record.validate()?;
        if let Some(file) = &mut self.file {
            file.write_all(&row_bytes(&record))?;
            file.flush()?;
        }
        let seq = record.seq;
        self.records.push(record);
        Ok(seq)
    }

    pub fn records(&self) -> &[ActionRecord] {
        &self.records
    }

    pub fn export_csv(&self) -> Vec<u8> {
        export_csv(&self.records)
    }
}

pub fn log_path(dir: &Path, session_id: &str) -> PathBuf {
    dir.join(format!("{session_id}.log.csv"))
}

/// Read access to logs archived in a data directory.
#[derive(Debug, Clone)]
pub struct LogStore {
    dir: PathBuf,
}

impl LogStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn create(&self, session_id: &str) -> Result<SessionLog, LogError> {
        SessionLog::create_file(&self.dir, session_id)
    }

    pub fn export_csv(&self, session_id: &str) -> Result<Vec<u8>, LogError> {
        match std::fs::read(log_path(&self.dir, session_id)) {
            Ok(bytes) => Ok(bytes),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(LogError::UnknownSession(session_id.to_string())),
            Err(e) => Err(e.into()),
        }
    }
}

/// Rebuilds prediction events from `prediction_recorded` rows, per session in
/// first-appearance order. Sessions without predictions are kept with an
/// empty event list.
///
/// Accuracy is recomputed from a fresh tally and must match each row's logged
/// two-decimal value.
pub fn prediction_events(records: &[ActionRecord]) -> Result<Vec<(String, Vec<PredictionEvent>)>, LogError> {
    let mut order: Vec<String> = Vec::new();
    let mut sessions: HashMap<&str, (AccuracyState, Vec<PredictionEvent>)> = HashMap::new();
    for r in records {
        let (tally, events) = sessions.entry(&r.session_id).or_insert_with(|| {
            order.push(r.session_id.clone());
            (AccuracyState::new(r.target_accuracy), Vec::new())
        });
        if r.action != Action::PredictionRecorded {
            continue;
        }
        let invalid = |reason| LogError::InvalidRecord {
            seq: r.seq,
            action: r.action,
            reason,
        };
        let kind = r.kind.ok_or_else(|| invalid("prediction without kind"))?;
        let correct = kind == PredictionKind::Correct;
        tally.record(correct);
        let replayed = Percent2::from_ratio(tally.n_correct, tally.n_total);
        let logged = r.accuracy_after.ok_or_else(|| invalid("prediction without accuracy"))?;
        if logged != replayed {
            return Err(LogError::AccuracyMismatch {
                seq: r.seq,
                logged,
                replayed,
            });
        }
        events.push(PredictionEvent {
            seq: events.len() as u64 + 1,
            trial_index: r.trial_index.ok_or_else(|| invalid("prediction without trial index"))?,
            ground_truth: r
                .ground_truth
                .clone()
                .ok_or_else(|| invalid("prediction without ground truth"))?,
            kind,
            predicted_label: r.predicted_label.clone(),
            confidence: r.confidence,
            correct,
            accuracy_after: tally.current(),
            timestamp_ms: r.timestamp_ms,
        });
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let events = sessions.remove(id.as_str()).map(|(_, e)| e).unwrap_or_default();
            (id, events)
        })
        .collect())
}
