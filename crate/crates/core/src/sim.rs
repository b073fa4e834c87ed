//! Headless auto-mode runs with no human in the loop.
//!
//! Ground truths cycle through the repository in entry order. Confidence for
//! each trial is drawn uniformly from 0..=100 with a [`SplitMix64`] stream
//! seeded by `seed ^ CONFIDENCE_STREAM`, independent of the error schedule.

use std::sync::Arc;

use crate::assist::ErrorWeights;
use crate::logstore::SessionLog;
use crate::repository::ErrorRepository;
use crate::rng::SplitMix64;
use crate::session::{PredictionEvent, Session, SessionConfig, SessionError, SessionMode, SessionSummary, StepClock};

const CONFIDENCE_STREAM: u64 = 0x636F_6E66_6964_656E;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub trials: u32,
    pub target_accuracy: f64,
    pub seed: u64,
    pub weights: ErrorWeights,
    pub expose_correctness_to_prototype: bool,
}

impl SimulationConfig {
    pub fn new(trials: u32, target_accuracy: f64, seed: u64) -> Self {
        Self {
            trials,
            target_accuracy,
            seed,
            weights: ErrorWeights::uniform(),
            expose_correctness_to_prototype: true,
        }
    }

    pub fn session_id(&self) -> String {
        format!("sim-{}-{}-{}", self.trials, self.target_accuracy, self.seed)
    }
}

#[derive(Debug)]
pub struct SimulationOutcome {
    pub summary: SessionSummary,
    pub events: Vec<PredictionEvent>,
    pub log_csv: Vec<u8>,
    pub session: Session,
}

/// Plays a full auto-mode session. Timestamps come from a step clock starting
/// at 0 and advancing 1000 ms per action, so output is identical across runs.
pub fn simulate(repo: Arc<ErrorRepository>, config: &SimulationConfig) -> Result<SimulationOutcome, SessionError> {
    let session_config = SessionConfig {
        session_id: config.session_id(),
        repository_name: repo.name().to_string(),
        target_accuracy: config.target_accuracy,
        mode: SessionMode::Auto,
        planned_trials: Some(config.trials),
        rng_seed: Some(config.seed),
        expose_correctness_to_prototype: config.expose_correctness_to_prototype,
        weights: config.weights,
    };
    let log = SessionLog::in_memory(session_config.session_id.clone());
    let labels: Vec<String> = repo.ground_truths().into_iter().map(String::from).collect();
    let mut session = Session::create(session_config, repo, log, Arc::new(StepClock::new(0, 1000)))?;
    let mut confidence = SplitMix64::new(config.seed ^ CONFIDENCE_STREAM);

    for trial in 0..config.trials as usize {
        session.select_ground_truth(&labels[trial % labels.len()])?;
        session.set_confidence(confidence.below(101) as i64)?;
        let kind = session.scheduled_kind().expect("schedule covers every planned trial");
        session.record_prediction(kind)?;
    }
    let summary = session.end()?;
    Ok(SimulationOutcome {
        summary,
        events: session.events().to_vec(),
        log_csv: session.log().export_csv(),
        session,
    })
}
