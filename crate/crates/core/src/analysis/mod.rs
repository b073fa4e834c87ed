//! Post-hoc analysis of recorded sessions: per-label prediction distributions,
//! achieved-accuracy statistics, accuracy deviation over time and the
//! confidence-on-correctness regression.
//!
//! Everything here is a pure function of event lists and works the same on a
//! live session as on events rebuilt from an imported log.

mod distribution;
mod regression;
pub mod special;

use std::collections::BTreeMap;

use serde::Serialize;

pub use distribution::{per_label_distribution, DistributionRow, DistributionTable};
pub use regression::{confidence_regression, simple_regression, RegressionResult};

use crate::accuracy::AccuracyState;
use crate::logstore::{prediction_events, ActionRecord, LogError};
use crate::scalar::Scalar;
use crate::session::{PredictionEvent, SessionMode, SessionSummary};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("need at least {needed} observations, found {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("predictor has no variance (only one correctness class)")]
    DegenerateX,
}

/// Mean and sample standard deviation of final accuracies for one target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyGroup<S> {
    pub target: f64,
    pub n_sessions: usize,
    pub mean: S,
    /// `None` for a single-session group.
    pub sd: Option<S>,
}

impl<S: Scalar> AccuracyGroup<S> {
    pub fn sd(&self) -> Result<S, AnalysisError> {
        self.sd.ok_or(AnalysisError::InsufficientData {
            needed: 2,
            found: self.n_sessions,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionAccuracy {
    pub session_id: String,
    pub target: f64,
    pub achieved: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracySummary<S> {
    pub sessions: Vec<SessionAccuracy>,
    /// Ordered by ascending target.
    pub groups: Vec<AccuracyGroup<S>>,
}

impl<S: Scalar> AccuracySummary<S> {
    pub fn group(&self, target: f64) -> Option<&AccuracyGroup<S>> {
        self.groups.iter().find(|g| g.target == target)
    }
}

pub fn mean<S: Scalar>(values: &[S]) -> Result<S, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::InsufficientData { needed: 1, found: 0 });
    }
    Ok(values.iter().fold(S::zero(), |a, &v| a + v) / S::from_count(values.len()))
}

/// Sample standard deviation (`n - 1` denominator).
pub fn sample_sd<S: Scalar>(values: &[S]) -> Result<S, AnalysisError> {
    if values.len() < 2 {
        return Err(AnalysisError::InsufficientData {
            needed: 2,
            found: values.len(),
        });
    }
    let m = mean(values)?;
    let ss = values.iter().fold(S::zero(), |a, &v| a + (v - m) * (v - m));
    Ok((ss / S::from_count(values.len() - 1)).sqrt())
}

/// Groups sessions by target accuracy and summarizes their final accuracies.
pub fn accuracy_stats<S: Scalar>(sessions: &[SessionSummary]) -> Result<AccuracySummary<S>, AnalysisError> {
    if sessions.is_empty() {
        return Err(AnalysisError::InsufficientData { needed: 1, found: 0 });
    }
    let mut by_target: Vec<(f64, Vec<S>)> = Vec::new();
    for s in sessions {
        let value = S::lit(s.final_accuracy);
        match by_target.iter_mut().find(|(t, _)| *t == s.target_accuracy) {
            Some((_, v)) => v.push(value),
            None => by_target.push((s.target_accuracy, vec![value])),
        }
    }
    by_target.sort_by(|a, b| a.0.total_cmp(&b.0));
    let groups = by_target
        .into_iter()
        .map(|(target, values)| {
            Ok(AccuracyGroup {
                target,
                n_sessions: values.len(),
                mean: mean(&values)?,
                sd: sample_sd(&values).ok(),
            })
        })
        .collect::<Result<_, AnalysisError>>()?;
    Ok(AccuracySummary {
        sessions: sessions
            .iter()
            .map(|s| SessionAccuracy {
                session_id: s.session_id.clone(),
                target: s.target_accuracy,
                achieved: s.final_accuracy,
            })
            .collect(),
        groups,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationPoint<S> {
    pub trial_index: u32,
    pub deviation: S,
}

/// Running accuracy minus target after every trial, recomputed from the
/// correctness flags.
pub fn deviation_series<S: Scalar>(events: &[PredictionEvent], target: f64) -> Vec<DeviationPoint<S>> {
    let mut tally = AccuracyState::new(target);
    events
        .iter()
        .map(|e| {
            tally.record(e.correct);
            DeviationPoint {
                trial_index: e.trial_index,
                deviation: S::lit(tally.current() - target),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionReport<S> {
    pub summary: SessionSummary,
    pub deviation: Vec<DeviationPoint<S>>,
}

/// Analysis of a whole log, possibly spanning several sessions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogAnalysis<S> {
    pub sessions: Vec<SessionReport<S>>,
    pub distribution: DistributionTable,
    pub accuracy: Option<AccuracySummary<S>>,
    /// Pooled over all sessions.
    pub regression: Option<RegressionResult<S>>,
    pub regression_error: Option<String>,
}

/// Summary, deviation series and regression for one session's events.
pub fn analyze_events<S: Scalar>(
    summary: SessionSummary,
    events: &[PredictionEvent],
    label_order: &[&str],
) -> LogAnalysis<S> {
    let deviation = deviation_series(events, summary.target_accuracy);
    build(vec![(summary, events.to_vec())], vec![deviation], label_order)
}

fn build<S: Scalar>(
    sessions: Vec<(SessionSummary, Vec<PredictionEvent>)>,
    deviations: Vec<Vec<DeviationPoint<S>>>,
    label_order: &[&str],
) -> LogAnalysis<S> {
    let all: Vec<PredictionEvent> = sessions.iter().flat_map(|(_, e)| e.iter().cloned()).collect();
    let summaries: Vec<SessionSummary> = sessions.iter().map(|(s, _)| s.clone()).collect();
    let (regression, regression_error) = match confidence_regression(&all) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    LogAnalysis {
        sessions: summaries
            .iter()
            .cloned()
            .zip(deviations)
            .map(|(summary, deviation)| SessionReport { summary, deviation })
            .collect(),
        distribution: per_label_distribution(&all, label_order),
        accuracy: accuracy_stats(&summaries).ok(),
        regression,
        regression_error,
    }
}

/// Rebuilds every session in `records` and analyzes them together.
pub fn analyze_records<S: Scalar>(records: &[ActionRecord], label_order: &[&str]) -> Result<LogAnalysis<S>, LogError> {
    let mut sessions = Vec::new();
    let mut deviations = Vec::new();
    for (session_id, events) in prediction_events(records)? {
        let first = records
            .iter()
            .find(|r| r.session_id == session_id)
            .expect("session id comes from the records");
        let mode = first.mode.parse().unwrap_or(SessionMode::Manual);
        let summary = SessionSummary::from_parts(&session_id, mode, first.target_accuracy, &events);
        deviations.push(deviation_series(&events, summary.target_accuracy));
        sessions.push((summary, events));
    }
    Ok(build(sessions, deviations, label_order))
}

/// Distinct kinds in tie-break order with their counts; handy for charts.
pub fn kind_totals(table: &DistributionTable) -> BTreeMap<crate::kind::PredictionKind, u64> {
    let mut totals = BTreeMap::new();
    for row in &table.rows {
        for (k, c) in &row.counts {
            *totals.entry(*k).or_default() += c;
        }
    }
    totals
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kind::PredictionKind;

    fn summary(id: &str, target: f64, achieved: f64) -> SessionSummary {
        SessionSummary {
            session_id: id.into(),
            mode: SessionMode::Manual,
            target_accuracy: target,
            n_trials: 12,
            n_correct: 0,
            final_accuracy: achieved,
            deviation: (achieved - target).abs(),
            counts: BTreeMap::new(),
        }
    }

    #[test]
    fn two_point_sd() {
        let s: AccuracySummary<f64> = accuracy_stats(&[summary("a", 50.0, 50.0), summary("b", 50.0, 70.0)]).unwrap();
        let g = s.group(50.0).unwrap();
        assert_eq!(g.mean, 60.0);
        // |a - b| / √2
        assert!((g.sd().unwrap() - 20.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((g.sd().unwrap() - 14.142_136).abs() < 1e-6);
    }

    #[test]
    fn single_session_group_has_no_sd() {
        let s: AccuracySummary<f64> = accuracy_stats(&[
            summary("a", 50.0, 58.0),
            summary("b", 70.0, 66.0),
            summary("c", 70.0, 66.0),
        ])
        .unwrap();
        assert_eq!(s.groups.len(), 2);
        assert_eq!(s.group(50.0).unwrap().mean, 58.0);
        assert_eq!(
            s.group(50.0).unwrap().sd(),
            Err(AnalysisError::InsufficientData { needed: 2, found: 1 })
        );
        assert_eq!(s.group(70.0).unwrap().sd(), Ok(0.0));
        assert!(accuracy_stats::<f64>(&[]).is_err());
    }

    fn ev(i: u32, correct: bool) -> PredictionEvent {
        PredictionEvent {
            seq: i as u64,
            trial_index: i,
            ground_truth: "oats".into(),
            kind: if correct {
                PredictionKind::Correct
            } else {
                PredictionKind::Wild
            },
            predicted_label: Some("oats".into()),
            confidence: Some(50),
            correct,
            accuracy_after: 0.0,
            timestamp_ms: 0,
        }
    }

    #[test]
    fn deviation_examples() {
        let alternating: Vec<_> = (1..=12).map(|i| ev(i, i % 2 == 1)).collect();
        let d = deviation_series::<f64>(&alternating, 50.0);
        assert_eq!(d.len(), 12);
        assert_eq!(d.last().unwrap().deviation, 0.0);
        assert_eq!(d[0].deviation, 50.0);

        let correct: Vec<_> = (1..=4).map(|i| ev(i, true)).collect();
        let d = deviation_series::<f64>(&correct, 50.0);
        assert_eq!(
            d.last().unwrap(),
            &DeviationPoint {
                trial_index: 4,
                deviation: 50.0
            }
        );
        assert!(deviation_series::<f64>(&[], 50.0).is_empty());
    }
}
