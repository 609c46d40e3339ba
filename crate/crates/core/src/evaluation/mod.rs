//! Monte Carlo comparison of resolution strategies against sampled ground
//! truth.
//!
//! Strategy setpoints are fixed per fixture; each trial draws a fresh ground
//! truth and credits whichever strategy lands closest. Trials use their own
//! generator substream, so results do not depend on execution order.

mod distribution;
mod experiment;

use thiserror::Error;

use crate::domain::Strategy;
use crate::prioritization::PrioritizationError;
use crate::resolution::ResolutionError;

pub use distribution::{sample, DistributionKind, DistributionSpec};
pub use experiment::{
    aggregate_reports, derive_distribution_params, fixture_from_case, read_report_csv, run_experiment, run_trial,
    write_report_csv, AccuracyReport, BatchAccuracy, DerivedParams, ExperimentConfig, Fixture, FixtureOptions,
    StrategyFraction, REPORT_HEADER,
};

/// Two distances closer than this count as a tie.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("invalid distribution {0:?}")]
    InvalidDistribution(DistributionSpec),
    #[error("experiment needs at least two strategies")]
    TooFewStrategies,
    #[error("experiment needs at least one fixture")]
    NoFixtures,
    #[error("batch sizes must be positive and strictly ascending")]
    BadBatchSizes,
    #[error("fixture `{fixture}` has no setpoint for strategy `{strategy}`")]
    MissingSetpoint { fixture: String, strategy: Strategy },
    #[error("reports disagree on strategies or batch sizes")]
    ShapeMismatch,
    #[error("no reports to aggregate")]
    NoReports,
    #[error("conflict attribute `{0}` is not numeric")]
    NonNumeric(String),
    #[error("report csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("report csv: {0}")]
    BadReport(String),
    #[error(transparent)]
    Prioritization(#[from] PrioritizationError),
    #[error(transparent)]
    Resolution(#[from] ResolutionError),
}

impl EvaluationError {
    pub fn code(&self) -> &'static str {
        match self {
            EvaluationError::InvalidDistribution(_) => "evaluation::InvalidDistribution",
            EvaluationError::TooFewStrategies => "evaluation::TooFewStrategies",
            EvaluationError::NoFixtures => "evaluation::NoFixtures",
            EvaluationError::BadBatchSizes => "evaluation::BadBatchSizes",
            EvaluationError::MissingSetpoint { .. } => "evaluation::MissingSetpoint",
            EvaluationError::ShapeMismatch => "evaluation::ShapeMismatch",
            EvaluationError::NoReports => "evaluation::NoReports",
            EvaluationError::NonNumeric(_) => "evaluation::NonNumeric",
            EvaluationError::Csv(_) => "evaluation::Csv",
            EvaluationError::BadReport(_) => "evaluation::BadReport",
            EvaluationError::Prioritization(e) => e.code(),
            EvaluationError::Resolution(e) => e.code(),
        }
    }
}
