//! Assistance for the wizard: pre-planned error schedules (auto mode) and
//! next-trial recommendations (recommend mode).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::accuracy::AccuracyState;
use crate::kind::PredictionKind;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssistError {
    #[error("{errors} errors requested but every error weight is zero")]
    ZeroWeights { errors: u32 },
    #[error("error weights must be finite and non-negative")]
    InvalidWeight,
    #[error("planned trials must be at least 1")]
    NoTrials,
    #[error("target accuracy {0} is outside [0, 100]")]
    InvalidTarget(f64),
    #[error("trial {index} is outside the planned schedule of {n_trials}")]
    IndexOutOfRange { index: u32, n_trials: u32 },
}

/// Relative frequency of each error kind in a planned budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ErrorWeights {
    pub segmentation: f64,
    pub similarity: f64,
    pub wild: f64,
    pub no_recognition: f64,
}

impl Default for ErrorWeights {
    fn default() -> Self {
        Self::uniform()
    }
}

impl ErrorWeights {
    pub const fn uniform() -> Self {
        Self {
            segmentation: 1.0,
            similarity: 1.0,
            wild: 1.0,
            no_recognition: 1.0,
        }
    }

    /// Weights in [`PredictionKind::ERRORS`] order.
    pub fn as_array(&self) -> [f64; 4] {
        [self.segmentation, self.similarity, self.wild, self.no_recognition]
    }
}

/// `round(n_trials * (1 - target / 100))`, halves rounded away from zero.
pub fn error_count(n_trials: u32, target: f64) -> u32 {
    // (100 - target) / 100 keeps integer targets exact, unlike 1 - target / 100.
    let errors = n_trials as f64 * (100.0 - target) / 100.0;
    errors.round() as u32
}

/// Splits `total` units across `weights` by the largest-remainder method.
///
/// Each slot gets the floor of its exact share; leftover units go to the
/// largest fractional remainders, ties to the lower index. The result always
/// sums to `total` and each slot lies within 1 of its exact share.
pub fn largest_remainder(total: u32, weights: &[f64]) -> Vec<u32> {
    let sum: f64 = weights.iter().sum();
    if total == 0 || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let shares: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut quotas: Vec<u32> = shares.iter().map(|s| s.floor() as u32).collect();
    let assigned: u32 = quotas.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = shares[a] - shares[a].floor();
        let rb = shares[b] - shares[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned) as usize) {
        quotas[i] += 1;
    }
    quotas
}

/// A pre-planned schedule of prediction kinds for auto mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub n_trials: u32,
    pub target_accuracy: f64,
    pub weights: ErrorWeights,
    pub kind_quota: BTreeMap<PredictionKind, u32>,
    pub schedule: Vec<PredictionKind>,
    pub seed: u64,
}

/// Plans how many errors of each kind to send and where.
///
/// The multiset is built in kind order (errors by quota, then `correct`) and
/// shuffled with [`SplitMix64`] seeded by `seed`.
pub fn plan_error_budget(
    n_trials: u32,
    target: f64,
    weights: &ErrorWeights,
    seed: u64,
) -> Result<ErrorBudget, AssistError> {
    if n_trials == 0 {
        return Err(AssistError::NoTrials);
    }
    if !(0.0..=100.0).contains(&target) {
        return Err(AssistError::InvalidTarget(target));
    }
    let w = weights.as_array();
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(AssistError::InvalidWeight);
    }
    let errors = error_count(n_trials, target);
    if errors > 0 && w.iter().sum::<f64>() <= 0.0 {
        return Err(AssistError::ZeroWeights { errors });
    }

    let quotas = largest_remainder(errors, &w);
    let kind_quota: BTreeMap<_, _> = PredictionKind::ERRORS.into_iter().zip(quotas.iter().copied()).collect();

    let mut schedule = Vec::with_capacity(n_trials as usize);
    for (&kind, &q) in &kind_quota {
        schedule.extend(std::iter::repeat_n(kind, q as usize));
    }
    schedule.resize(n_trials as usize, PredictionKind::Correct);
    SplitMix64::new(seed).shuffle(&mut schedule);

    Ok(ErrorBudget {
        n_trials,
        target_accuracy: target,
        weights: *weights,
        kind_quota,
        schedule,
        seed,
    })
}

impl ErrorBudget {
    pub fn error_count(&self) -> u32 {
        self.kind_quota.values().sum()
    }

    /// The kind the wizard must send on trial `trial_index` (1-based).
    pub fn next_scheduled_kind(&self, trial_index: u32) -> Result<PredictionKind, AssistError> {
        if trial_index == 0 || trial_index > self.n_trials {
            return Err(AssistError::IndexOutOfRange {
                index: trial_index,
                n_trials: self.n_trials,
            });
        }
        Ok(self.schedule[trial_index as usize - 1])
    }

    /// Accuracy reached if the whole schedule is played out.
    pub fn final_accuracy(&self) -> f64 {
        100.0 * (self.n_trials - self.error_count()) as f64 / self.n_trials as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub kind: PredictionKind,
    pub reason: String,
    pub projected_accuracy: f64,
}

/// Suggests the next prediction kind.
///
/// First picks between `correct` and an error, whichever lands the next
/// accuracy closer to target (ties go to `correct`). When an error wins, the
/// least-used error kind so far is suggested, ties in
/// segmentation < similarity < wild < no_recognition order.
pub fn recommend(accuracy: &AccuracyState, kind_counts: &BTreeMap<PredictionKind, usize>) -> Recommendation {
    let n = accuracy.n_total as f64;
    let c = accuracy.n_correct as f64;
    let scaled_target = accuracy.target * (n + 1.0);
    // Distances scaled by (n + 1) so integer inputs compare exactly.
    let if_correct = (100.0 * (c + 1.0) - scaled_target).abs();
    let if_error = (100.0 * c - scaled_target).abs();

    if if_error < if_correct {
        let (kind, used) = PredictionKind::ERRORS
            .into_iter()
            .map(|k| (k, kind_counts.get(&k).copied().unwrap_or(0)))
            .min_by_key(|&(_, used)| used)
            .expect("four error kinds");
        let projected = 100.0 * c / (n + 1.0);
        Recommendation {
            kind,
            reason: format!(
                "an error brings accuracy to {projected:.2}% (target {}%); {kind} used {used} time(s), the least so far",
                accuracy.target
            ),
            projected_accuracy: projected,
        }
    } else {
        let projected = 100.0 * (c + 1.0) / (n + 1.0);
        Recommendation {
            kind: PredictionKind::Correct,
            reason: format!(
                "a correct prediction brings accuracy to {projected:.2}% (target {}%)",
                accuracy.target
            ),
            projected_accuracy: projected,
        }
    }
}
