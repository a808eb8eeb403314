//! Synthetic patients, clinicians and facilities for the FQHC cluster archetypes.

mod cluster;
mod cluster_csv;
mod facility;
mod patient;
mod schedule;

pub use cluster::{builtin_cluster_specs, AttributeParams, ClusterSpec};
pub use cluster_csv::{
    load_cluster_csv, read_cluster_csv, write_cluster_csv, ClusterCsvError, CLUSTER_CSV_COLUMNS,
};
pub use facility::{
    build_facility, ClinicianProfile, FacilityConfig, FacilityProfile, HoursVariant, PanelPolicy,
    EXTENSION_HOURS, STAGGER_MINUTES,
};
pub use patient::{
    generate_population, Insurance, PatientProfile, PromptPropensity, RaceEthnicity, Sex,
    AGE_RANGE, PROPENSITY_RANGE,
};
pub use schedule::{AppointmentBook, WorkSchedule, WEEKDAYS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PopulationError {
    #[error("invalid spec for cluster {cluster_id}: {message}")]
    InvalidSpec { cluster_id: u8, message: String },
    #[error("a facility needs at least one clinician")]
    NoClinicians,
    #[error("invalid facility configuration: {0}")]
    InvalidFacility(String),
}
