//! The Wizard-of-Oz session state machine.
//!
//! A trial is: select the ground truth, optionally adjust confidence, then
//! record a prediction kind. Only recorded predictions count as trials. Every
//! step is written to the session's action log.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::accuracy::{AccuracyState, Percent2};
use crate::assist::{plan_error_budget, recommend, AssistError, ErrorBudget, ErrorWeights, Recommendation};
use crate::kind::PredictionKind;
use crate::logstore::{Action, ActionRecord, LogError, SessionLog};
use crate::repository::ErrorRepository;

pub const DEFAULT_CONFIDENCE: u8 = 50;

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("auto mode requires planned_trials")]
    MissingPlannedTrials,
    #[error("unknown repository `{0}`")]
    UnknownRepository(String),
    #[error("target accuracy {0} is outside [0, 100]")]
    InvalidTarget(f64),
    #[error("planned_trials must be at least 1")]
    InvalidPlannedTrials,
    #[error("unknown ground truth `{0}`")]
    UnknownGroundTruth(String),
    #[error("session is not running")]
    SessionNotRunning,
    #[error("confidence {0} is outside [0, 100]")]
    OutOfRange(i64),
    #[error("no ground truth selected")]
    NoGroundTruthSelected,
    #[error("trial {trial} is scheduled as {expected}, not {requested}")]
    KindNotScheduled {
        trial: u32,
        expected: PredictionKind,
        requested: PredictionKind,
    },
    #[error("all {0} planned trials have been recorded")]
    BudgetExhausted(u32),
    #[error(transparent)]
    Budget(#[from] AssistError),
    #[error(transparent)]
    Log(#[from] LogError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionMode {
    #[default]
    Manual,
    Recommend,
    Auto,
}

impl SessionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionMode::Manual => "manual",
            SessionMode::Recommend => "recommend",
            SessionMode::Auto => "auto",
        }
    }
}

impl fmt::Display for SessionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SessionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "manual" => Ok(SessionMode::Manual),
            "recommend" => Ok(SessionMode::Recommend),
            "auto" => Ok(SessionMode::Auto),
            _ => Err(format!("unknown mode `{s}` (expected manual, recommend or auto)")),
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub session_id: String,
    pub repository_name: String,
    pub target_accuracy: f64,
    #[serde(default)]
    pub mode: SessionMode,
    #[serde(default)]
    pub planned_trials: Option<u32>,
    #[serde(default)]
    pub rng_seed: Option<u64>,
    #[serde(default = "default_true")]
    pub expose_correctness_to_prototype: bool,
    #[serde(default)]
    pub weights: ErrorWeights,
}

impl SessionConfig {
    pub fn manual(session_id: impl Into<String>, repository_name: impl Into<String>, target_accuracy: f64) -> Self {
        Self {
            session_id: session_id.into(),
            repository_name: repository_name.into(),
            target_accuracy,
            mode: SessionMode::Manual,
            planned_trials: None,
            rng_seed: None,
            expose_correctness_to_prototype: true,
            weights: ErrorWeights::uniform(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Setup,
    Running,
    Ended,
}

/// One recorded wizard decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionEvent {
    pub seq: u64,
    pub trial_index: u32,
    pub ground_truth: String,
    pub kind: PredictionKind,
    pub predicted_label: Option<String>,
    pub confidence: Option<u8>,
    pub correct: bool,
    pub accuracy_after: f64,
    pub timestamp_ms: i64,
}

/// Source of wall-clock milliseconds.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> i64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> i64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as i64)
    }
}

/// Deterministic clock: starts at `start` and advances by `step` per reading.
#[derive(Debug)]
pub struct StepClock {
    next: AtomicI64,
    step: i64,
}

impl StepClock {
    pub fn new(start: i64, step: i64) -> Self {
        Self {
            next: AtomicI64::new(start),
            step,
        }
    }
}

impl Clock for StepClock {
    fn now_ms(&self) -> i64 {
        self.next.fetch_add(self.step, Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub mode: SessionMode,
    pub target_accuracy: f64,
    pub n_trials: u64,
    pub n_correct: u64,
    pub final_accuracy: f64,
    /// `|final_accuracy - target_accuracy|`.
    pub deviation: f64,
    pub counts: BTreeMap<PredictionKind, u64>,
}

impl SessionSummary {
    pub fn from_events(config: &SessionConfig, events: &[PredictionEvent]) -> Self {
        Self::from_parts(&config.session_id, config.mode, config.target_accuracy, events)
    }

    pub fn from_parts(session_id: &str, mode: SessionMode, target_accuracy: f64, events: &[PredictionEvent]) -> Self {
        let mut counts: BTreeMap<_, _> = PredictionKind::ALL.into_iter().map(|k| (k, 0)).collect();
        let mut acc = AccuracyState::new(target_accuracy);
        for e in events {
            *counts.entry(e.kind).or_default() += 1;
            acc.record(e.correct);
        }
        Self {
            session_id: session_id.to_string(),
            mode,
            target_accuracy,
            n_trials: acc.n_total,
            n_correct: acc.n_correct,
            final_accuracy: acc.current(),
            deviation: (acc.current() - target_accuracy).abs(),
            counts,
        }
    }
}

/// Serializable view of a session for the console.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub config: SessionConfig,
    pub phase: Phase,
    pub ground_truths: Vec<String>,
    pub pending_ground_truth: Option<String>,
    pub pending_confidence: Option<u8>,
    pub accuracy: AccuracyView,
    pub events: Vec<PredictionEvent>,
    pub recommendation: Option<Recommendation>,
    pub scheduled_kind: Option<PredictionKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyView {
    pub n_total: u64,
    pub n_correct: u64,
    pub current: f64,
    pub target: f64,
    pub display: String,
}

impl From<&AccuracyState> for AccuracyView {
    fn from(a: &AccuracyState) -> Self {
        Self {
            n_total: a.n_total,
            n_correct: a.n_correct,
            current: a.current(),
            target: a.target,
            display: a.display(),
        }
    }
}

/// A live session. Mutations go through `&mut self`, so callers that share a
/// session serialize them behind a single lock or task.
pub struct Session {
    config: SessionConfig,
    repo: Arc<ErrorRepository>,
    budget: Option<ErrorBudget>,
    phase: Phase,
    pending_ground_truth: Option<String>,
    pending_confidence: Option<u8>,
    events: Vec<PredictionEvent>,
    accuracy: AccuracyState,
    log: SessionLog,
    clock: Arc<dyn Clock>,
}

impl fmt::Debug for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Session")
            .field("session_id", &self.config.session_id)
            .field("phase", &self.phase)
            .field("events", &self.events.len())
            .finish_non_exhaustive()
    }
}

impl Session {
    /// Starts a session. Auto mode plans its error budget here, seeded with
    /// `rng_seed` (0 when absent).
    pub fn create(
        config: SessionConfig,
        repo: Arc<ErrorRepository>,
        log: SessionLog,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, SessionError> {
        if repo.name() != config.repository_name {
            return Err(SessionError::UnknownRepository(config.repository_name));
        }
        if !(0.0..=100.0).contains(&config.target_accuracy) {
            return Err(SessionError::InvalidTarget(config.target_accuracy));
        }
        if config.planned_trials == Some(0) {
            return Err(SessionError::InvalidPlannedTrials);
        }
        let budget = match (config.mode, config.planned_trials) {
            (SessionMode::Auto, None) => return Err(SessionError::MissingPlannedTrials),
            (SessionMode::Auto, Some(n)) => Some(plan_error_budget(
                n,
                config.target_accuracy,
                &config.weights,
                config.rng_seed.unwrap_or(0),
            )?),
            _ => None,
        };
        let mut session = Self {
            accuracy: AccuracyState::new(config.target_accuracy),
            config,
            repo,
            budget,
            phase: Phase::Setup,
            pending_ground_truth: None,
            pending_confidence: None,
            events: Vec::new(),
            log,
            clock,
        };
        session.log_action(Action::SessionStarted)?;
        session.phase = Phase::Running;
        Ok(session)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn repository(&self) -> &ErrorRepository {
        &self.repo
    }

    pub fn budget(&self) -> Option<&ErrorBudget> {
        self.budget.as_ref()
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn pending_ground_truth(&self) -> Option<&str> {
        self.pending_ground_truth.as_deref()
    }

    pub fn pending_confidence(&self) -> Option<u8> {
        self.pending_confidence
    }

    pub fn events(&self) -> &[PredictionEvent] {
        &self.events
    }

    pub fn log(&self) -> &SessionLog {
        &self.log
    }

    pub fn current_accuracy(&self) -> AccuracyState {
        self.accuracy
    }

    pub fn next_trial_index(&self) -> u32 {
        self.events.len() as u32 + 1
    }

    pub fn kind_counts(&self) -> BTreeMap<PredictionKind, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.events {
            *counts.entry(e.kind).or_default() += 1;
        }
        counts
    }

    /// Kind the next trial must use in auto mode.
    pub fn scheduled_kind(&self) -> Option<PredictionKind> {
        self.budget
            .as_ref()
            .and_then(|b| b.next_scheduled_kind(self.next_trial_index()).ok())
    }

    /// Advisory suggestion; offered in recommend mode only.
    pub fn recommendation(&self) -> Option<Recommendation> {
        (self.config.mode == SessionMode::Recommend && self.phase == Phase::Running)
            .then(|| recommend(&self.accuracy, &self.kind_counts()))
    }

    fn ensure_running(&self) -> Result<(), SessionError> {
        if self.phase == Phase::Running {
            Ok(())
        } else {
            Err(SessionError::SessionNotRunning)
        }
    }

    fn record(&self, action: Action) -> ActionRecord {
        ActionRecord::new(
            action,
            self.clock.now_ms(),
            &self.config.session_id,
            self.config.target_accuracy,
            self.config.mode.as_str(),
        )
    }

    fn log_action(&mut self, action: Action) -> Result<u64, SessionError> {
        let record = self.record(action);
        Ok(self.log.append(record)?)
    }

    /// First step of a trial. Re-selecting replaces the pending label and
    /// resets confidence to the default.
    pub fn select_ground_truth(&mut self, label: &str) -> Result<(), SessionError> {
        self.ensure_running()?;
        let label = label.trim();
        if !self.repo.contains(label) {
            return Err(SessionError::UnknownGroundTruth(label.to_string()));
        }
        let mut record = self.record(Action::GroundTruthSelected);
        record.trial_index = Some(self.next_trial_index());
        record.ground_truth = Some(label.to_string());
        self.log.append(record)?;
        self.pending_ground_truth = Some(label.to_string());
        self.pending_confidence = Some(DEFAULT_CONFIDENCE);
        Ok(())
    }

    pub fn set_confidence(&mut self, value: i64) -> Result<(), SessionError> {
        self.ensure_running()?;
        let value = u8::try_from(value)
            .ok()
            .filter(|v| *v <= 100)
            .ok_or(SessionError::OutOfRange(value))?;
        let mut record = self.record(Action::ConfidenceSet);
        record.trial_index = Some(self.next_trial_index());
        record.ground_truth = self.pending_ground_truth.clone();
        record.confidence = Some(value);
        self.log.append(record)?;
        self.pending_confidence = Some(value);
        Ok(())
    }

    /// Completes the trial: resolves the label, updates accuracy, logs the
    /// event and clears the pending selection.
    pub fn record_prediction(&mut self, kind: PredictionKind) -> Result<PredictionEvent, SessionError> {
        self.ensure_running()?;
        let trial_index = self.next_trial_index();
        if let Some(budget) = &self.budget {
            let expected = budget
                .next_scheduled_kind(trial_index)
                .map_err(|_| SessionError::BudgetExhausted(budget.n_trials))?;
            if expected != kind {
                return Err(SessionError::KindNotScheduled {
                    trial: trial_index,
                    expected,
                    requested: kind,
                });
            }
        }
        let ground_truth = self
            .pending_ground_truth
            .clone()
            .ok_or(SessionError::NoGroundTruthSelected)?;
        let predicted_label = self
            .repo
            .lookup(&ground_truth, kind)
            .map_err(|_| SessionError::UnknownGroundTruth(ground_truth.clone()))?
            .map(str::to_string);
        let confidence = match kind {
            PredictionKind::NoRecognition => None,
            _ => Some(self.pending_confidence.unwrap_or(DEFAULT_CONFIDENCE)),
        };
        let correct = kind == PredictionKind::Correct;

        let mut tally = self.accuracy;
        tally.record(correct);
        let mut record = self.record(Action::PredictionRecorded);
        let timestamp_ms = record.timestamp_ms;
        record.trial_index = Some(trial_index);
        record.ground_truth = Some(ground_truth.clone());
        record.kind = Some(kind);
        record.predicted_label = predicted_label.clone();
        record.confidence = confidence;
        record.correct = Some(correct);
        record.accuracy_after = Some(Percent2::from_ratio(tally.n_correct, tally.n_total));
        self.log.append(record)?;

        self.accuracy = tally;
        let event = PredictionEvent {
            seq: self.events.len() as u64 + 1,
            trial_index,
            ground_truth,
            kind,
            predicted_label,
            confidence,
            correct,
            accuracy_after: tally.current(),
            timestamp_ms,
        };
        self.events.push(event.clone());
        self.pending_ground_truth = None;
        self.pending_confidence = None;
        Ok(event)
    }

    pub fn end(&mut self) -> Result<SessionSummary, SessionError> {
        self.ensure_running()?;
        self.log_action(Action::SessionEnded)?;
        self.phase = Phase::Ended;
        self.pending_ground_truth = None;
        self.pending_confidence = None;
        Ok(self.summary())
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary::from_events(&self.config, &self.events)
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            config: self.config.clone(),
            phase: self.phase,
            ground_truths: self.repo.ground_truths().into_iter().map(String::from).collect(),
            pending_ground_truth: self.pending_ground_truth.clone(),
            pending_confidence: self.pending_confidence,
            accuracy: AccuracyView::from(&self.accuracy),
            events: self.events.clone(),
            recommendation: self.recommendation(),
            scheduled_kind: if self.phase == Phase::Running {
                self.scheduled_kind()
            } else {
                None
            },
        }
    }
}
