//! Core of a Wizard-of-Oz toolkit for simulating a supervised classifier,
//! including its mistakes.
//!
//! A human wizard watches the input, picks the ground truth and then decides
//! what the "model" answers: the correct label or one of four typed errors
//! (segmentation, similarity, wild, no recognition) resolved through an
//! [`ErrorRepository`]. The [`Session`] tracks live accuracy against a target,
//! logs every action, and produces [`WireMessage`] frames for prototypes.
//!
//! Statistics are generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix them to `f64`.

pub mod accuracy;
pub mod analysis;
pub mod assist;
pub mod kind;
pub mod logstore;
pub mod protocol;
pub mod repository;
pub mod rng;
pub mod scalar;
pub mod session;
pub mod sim;

pub use accuracy::{AccuracyState, Percent2};
pub use assist::{plan_error_budget, recommend, ErrorBudget, ErrorWeights, Recommendation};
pub use kind::PredictionKind;
pub use logstore::{export_csv, import_csv, ActionRecord, LogStore, SessionLog};
pub use protocol::{ClientRegistry, FrameSink, WireMessage};
pub use repository::{ErrorRepository, RepositoryEntry};
pub use scalar::Scalar;
pub use session::{
    Clock, PredictionEvent, Session, SessionConfig, SessionMode, SessionSnapshot, SessionSummary, StepClock,
    SystemClock,
};

pub type Regression = analysis::RegressionResult<f64>;
pub type Regression32 = analysis::RegressionResult<f32>;
pub type AccuracySummary = analysis::AccuracySummary<f64>;
pub type LogAnalysis = analysis::LogAnalysis<f64>;
pub type DeviationPoint = analysis::DeviationPoint<f64>;
