//! Patient care pathway: prompts, appointments, visits, orders and test completion.

mod model;
mod pathway;
mod pdf;

pub use model::{warmup, CareState, Simulation};
pub use pathway::{
    complete_test, daily_entry_prompts, doctor_visit, order_probability, prompts_with_hazards,
    request_appointment, Appointment, CareConfig, CareOrder, PromptHazards, RequestOutcome,
    VisitOutcome, VisitReason,
};
pub use pdf::{
    completion_key, delay_key, order_key, placeholder_event_outcome, AttributeModifier,
    Distribution, Outcome, PdfSpec, PdfTable, Predicate, KEY_ATTENDANCE, KEY_PROMPT_SICK,
    KEY_PROMPT_SYMPTOM,
};

use crate::kernel::KernelError;
use crate::population::PopulationError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CareError {
    #[error("no distribution registered under `{0}`")]
    MissingPdf(String),
    #[error("invalid distribution `{key}`: {message}")]
    InvalidSpec { key: String, message: String },
    #[error("patient {0} has no clinician")]
    Unassigned(u32),
    #[error("invalid care configuration: {0}")]
    Config(String),
    #[error("malformed event: {0}")]
    BadEvent(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Population(#[from] PopulationError),
}
