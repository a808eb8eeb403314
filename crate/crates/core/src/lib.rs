//! Discrete-event simulation of diabetic screening in federally qualified
//! health centers, comparing a baseline practice against clinician training
//! scenarios.
//!
//! The crate is layered: [`kernel`] is a generic event engine, [`population`]
//! builds patients and facilities, [`care`] wires the care pathway onto the
//! kernel, [`intervention`] constructs scenario arms, [`analysis`] scores and
//! compares runs, and [`experiment`] farms runs and writes output bundles.

pub mod analysis;
pub mod care;
pub mod experiment;
pub mod intervention;
pub mod kernel;
pub mod measure;
pub mod population;
pub mod rng;
pub mod time;

pub use analysis::{AnalysisError, CqmResult, EffectEstimate, PilotBenchmark, RunResult, ValidationReport};
pub use care::{CareConfig, CareError, PdfSpec, PdfTable, Simulation};
pub use experiment::{ConfigError, ExperimentConfig, ExperimentError, OutputBundle};
pub use intervention::{Arm, InterventionError, ScenarioConfig, TrainingEffectParams};
pub use kernel::{EventCalendar, EventKind, EventRecord, KernelError};
pub use measure::{Measure, PerMeasure};
pub use population::{ClusterSpec, FacilityConfig, PatientProfile, PopulationError};
pub use rng::RngStream;
pub use time::SimTime;
