//! Experiment configuration, the parallel run farm and output bundles.

mod bundle;
mod config;
mod report;
mod runner;

pub use bundle::{
    read_manifest, read_runs_csv, regenerate_reports, run_experiment, verify_bundle, write_reports,
    Manifest, OutputBundle, Verification, EFFECTS_CSV, MANIFEST, PLOTDATA_DIR, RUNS_CSV, TRACES_DIR,
    VALIDATION_CSV, VALIDATION_JSON,
};
pub use config::{ClusterSelection, ConfigError, ExperimentConfig, QUICK_POPULATION, QUICK_RUNS_PER_CELL};
pub use report::{emit_reports, summary, EffectRow, PlotRow, Reports, NATIONAL};
pub use runner::{cells, run_all, run_cell, Cell, RunOutput};

use crate::analysis::AnalysisError;
use crate::care::CareError;
use crate::intervention::InterventionError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {message}")]
    Csv { path: String, message: String },
    #[error("output directory {0} exists and is not a bundle")]
    OutputExists(String),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Intervention(#[from] InterventionError),
    #[error(transparent)]
    Care(#[from] CareError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}
