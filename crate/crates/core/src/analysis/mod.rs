//! Run-level quality measures, arm effects, national aggregation and pilot validation.

mod anova;
mod benchmark;
mod cqm;
mod effect;

pub use anova::{weighted_anova, wls, AnovaTable, Coefficient, FactorTest, WlsFit, ALPHA};
pub use benchmark::{
    check_monotone, ci_overlap, pilot_ci, validate_against_pilot, EffectEstimateAt, MonotonicityViolation,
    PilotBenchmark, PilotValue, ValidationReport, ValidationRow, PILOT_YEARS,
};
pub use cqm::{compute_cqm, CqmResult, RunResult};
pub use effect::{arm_effect, weighted_national_estimate, EffectEstimate, Z95};

use crate::measure::Measure;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("no diabetic patients in the population")]
    EmptyDenominator,
    #[error("{arm} arm has {found} runs; at least 2 are needed")]
    InsufficientRuns { arm: &'static str, found: usize },
    #[error("paired runs do not match: {0}")]
    UnmatchedRuns(String),
    #[error("no estimate or weight for cluster {0}")]
    MissingCluster(u8),
    #[error("singular design: {0}")]
    SingularDesign(String),
    #[error("malformed interval [{lo}, {hi}]")]
    MalformedInterval { lo: f64, hi: f64 },
    #[error("no estimate for {measure} with {k} trainings")]
    MissingEstimate { measure: Measure, k: u8 },
    #[error("no runs to analyse")]
    MissingRuns,
}
