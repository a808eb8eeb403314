//! Deterministic discrete-event engine: clock, calendar, dispatch and FIFO resources.

mod calendar;
mod engine;
mod event;
mod resource;
pub mod trace;

pub use calendar::EventCalendar;
pub use engine::{run_until, Handler, Handlers};
pub use event::{EventId, EventKind, EventRecord, Payload, Subject};
pub use resource::{FifoResource, Grant};

use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KernelError {
    #[error("cannot schedule at t={requested} when the clock is at t={now}")]
    TimeInPast { requested: SimTime, now: SimTime },
    #[error("no handler registered for event kind `{0}`")]
    UnknownEventKind(EventKind),
}
